import importlib.machinery
import importlib.util
import os
import sys
from pathlib import Path

# Under ctest, test the freshly built module rather than any installed copy.
_build_dir = os.environ.get("MIBCI_PY_BUILD_DIR")
if _build_dir:
    (_so,) = Path(_build_dir).glob("mibci*" + importlib.machinery.EXTENSION_SUFFIXES[0])
    _spec = importlib.util.spec_from_file_location("mibci", _so)
    _mod = importlib.util.module_from_spec(_spec)
    _spec.loader.exec_module(_mod)
    sys.modules["mibci"] = _mod
