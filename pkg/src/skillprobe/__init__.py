"""Black-box exploration and risk auditing for voice-app skill ecosystems."""

__version__ = "0.1.0"
