"""Temporal-graph memory training and analysis toolkit."""

try:
    from tgmem._core import *  # noqa: F401,F403
    from tgmem._core import __version__  # noqa: F401
except ImportError:
    # Build-tree layout: the extension sits next to this package.
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
