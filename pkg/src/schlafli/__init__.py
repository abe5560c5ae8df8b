"""Space-form geometry with numerical checks of Schläfli-type identities."""

from .spaceform import SpaceForm

__version__ = "0.1.0"
__all__ = ["SpaceForm", "__version__"]
