"""Path-integral regularization laboratory."""

import importlib.metadata

__author__ = "Elias Benbourenane <eliasbenbourenane@gmail.com>"
__credits__ = ["eliasbenb"]
__license__ = "MIT"
__maintainer__ = "eliasbenb"
__email__ = "eliasbenbourenane@gmail.com"
try:
    __version__ = importlib.metadata.version("pathint")
except importlib.metadata.PackageNotFoundError:  # running from a source checkout
    __version__ = "0.0.0"
