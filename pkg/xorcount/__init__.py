"""Approximate model counting with sparse XOR hash constraints."""
from xorcount.errors import (CapacityError, DimensionError, DomainError, InconclusiveError, IntegrityError,
                             ParameterError, ProtocolError, SpecFormatError, XorCountError)

__version__ = '1.0.0'
