"""Descriptor-based tabular retrieval toolkit.

Thin re-export of the native module: a trainable text encoder, a
descriptor index with exact top-k search, retrieval metrics, and dataset
generation utilities.
"""

try:
    from ._tem import *  # noqa: F401,F403  (installed package layout)
    from . import _tem as _backend
except ImportError:  # build-tree layout: _tem.so sits on PYTHONPATH
    from _tem import *  # noqa: F401,F403
    import _tem as _backend

__all__ = sorted(name for name in dir(_backend) if not name.startswith("_"))
__version__ = "0.1.0"
