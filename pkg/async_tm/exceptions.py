class InvalidConfigException(Exception):
    pass


class DatasetParseException(Exception):
    def __init__(self, path: str, line_number: int, message: str):
        super().__init__("{}:{}: {}".format(path, line_number, message))
        self.path = path
        self.line_number = line_number


class DatasetSchemaException(Exception):
    pass


class EmptyDatasetException(Exception):
    pass


class TargetRangeException(Exception):
    pass


class ModelFormatException(Exception):
    pass


class MetricsException(Exception):
    pass


class DownloadException(Exception):
    pass
