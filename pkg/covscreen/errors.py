class CovScreenError(Exception):
    pass


class DataError(CovScreenError, ValueError):

    def __init__(self, message, row=None, column=None):
        super(DataError, self).__init__(message)
        self.row = row
        self.column = column


class ConstantColumnError(DataError):

    def __init__(self, index):
        super(ConstantColumnError, self).__init__('constant column %d' % index)
        self.index = index


class RankDeficientError(CovScreenError):

    def __init__(self, message, smallest_singular_value=None, block_id=None):
        super(RankDeficientError, self).__init__(message)
        self.smallest_singular_value = smallest_singular_value
        self.block_id = block_id


class ScreeningError(CovScreenError):
    pass


class ResampleError(CovScreenError):
    pass


class ConfigError(CovScreenError, ValueError):

    def __init__(self, message, keys=None):
        super(ConfigError, self).__init__(message)
        self.keys = list(keys) if keys else []
