import logging


def setup_default_logger(name: str = None, level: int = logging.INFO):
    logger = logging.getLogger(name)
    if not logger.hasHandlers():
        handler = logging.StreamHandler()
        handler.setFormatter(
            logging.Formatter('%(asctime)s %(name)-8s %(levelname)-8s %(message)s [%(filename)s:%(lineno)d]'))
        logger.addHandler(handler)
    if logger.level == logging.NOTSET:
        logger.setLevel(level)
    return logger


def set_log_level(level):
    """ apply a level (name or number) to the whole covscreen logger tree """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            raise ValueError('unknown log level: %s' % level)
    root = logging.getLogger('covscreen')
    root.setLevel(level)
    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.startswith('covscreen.') and isinstance(logger, logging.Logger):
            logger.setLevel(level)
