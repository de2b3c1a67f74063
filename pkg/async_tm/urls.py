BIKE_SHARING_URL = (
    "https://archive.ics.uci.edu/static/public/275/bike+sharing+dataset.zip"
)
BIKE_SHARING_MEMBER = "hour.csv"

USER_AGENT = "async-tm dataset fetcher"
DOWNLOAD_TIMEOUT = 60
