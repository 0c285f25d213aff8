"""Package manager and registry for agent skill packages."""

__version__ = "0.1.0"

SKILLDEX_VERSION = __version__
SPEC_VERSION = "1.0"
