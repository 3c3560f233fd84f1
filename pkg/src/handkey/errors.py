"""Exception hierarchy shared by all handkey modules."""


class HandkeyError(Exception):
    """Base class for every error raised by this package."""


class ParseError(HandkeyError, ValueError):
    pass


class EmptyTrace(HandkeyError, ValueError):
    pass


class AnchorOutOfRange(HandkeyError, IndexError):
    pass


class NoAnchor(HandkeyError):
    """No handshake peak was found in a trace."""


class TooFewSamples(HandkeyError, ValueError):
    pass


class DegenerateInput(HandkeyError, ValueError):
    pass


class LengthMismatch(HandkeyError, ValueError):
    pass


class TooShort(HandkeyError, ValueError):
    pass


class EmptyFeature(HandkeyError, ValueError):
    pass


class InsufficientBits(HandkeyError):
    """Too few reconciled bits to assemble a key; the users must shake again."""


class AuthError(HandkeyError):
    """Authenticated decryption failed (wrong key or tampered message)."""


class Timeout(HandkeyError):
    pass


class AmbiguousPeer(HandkeyError):
    pass


class NotConfirmed(HandkeyError):
    pass


class EmptyPopulation(HandkeyError, ValueError):
    pass
