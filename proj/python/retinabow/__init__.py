"""Bag-of-visual-words retinal fundus image classification.

Thin wrapper over the compiled core: image loading and normalization,
descriptor extraction (SURF, dense SURF, HOG, uniform LBP), k-means
dictionaries, histogram encoding, and one-vs-one linear SVM training.
"""

try:
    from ._retinabow import *  # noqa: F401,F403
    from ._retinabow import MODES, __version__  # noqa: F401
except ImportError:  # in-tree use: the module sits on PYTHONPATH beside the build
    from _retinabow import *  # noqa: F401,F403
    from _retinabow import MODES, __version__  # noqa: F401
