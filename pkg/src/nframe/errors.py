"""Shared exception types."""


class DataError(Exception):
    """An input file or record violates its documented schema or contract.

    The command line maps this to exit code 2 so scripted pipelines can
    distinguish bad data from bad invocations.
    """
