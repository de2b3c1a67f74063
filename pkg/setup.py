import os

from setuptools import setup

readme_path = os.path.join(
    os.path.dirname(os.path.abspath(__file__)),
    "README.md",
)
long_description = open(readme_path).read()

setup(
    name="async-tm",
    packages=["async_tm", "async_tm.cli"],
    description="Tsetlin Machine engine with lock-free asynchronous clause training",
    long_description=long_description,
    long_description_content_type="text/markdown",
    zip_safe=False,
    python_requires=">=3.8",
    classifiers=[
        "Intended Audience :: Science/Research",
        "Programming Language :: Python",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    install_requires=[
        "numpy>=1.22,<3.0",
        "pandas>=1.4,<3.0",
        "scikit-learn>=1.1,<2.0",
        "atomics>=1.0.2,<2.0.0",
        "requests>=2.25.1,<3.0.0",
    ],
    extras_require={
        "cli": ["click>=8.0.1,<9.0.0", "terminaltables>=3.1.0,<4.0.0"],
        "test": [
            "pytest>=7.0",
            "hypothesis>=6.0",
            "click>=8.0.1,<9.0.0",
            "terminaltables>=3.1.0,<4.0.0",
        ],
    },
    entry_points={
        "console_scripts": ["async-tm=async_tm.cli.__main__:cli"],
    },
)
