"""Calibrated constants measured on reference sweeps, with provenance.

The packaged data/calibration.json is produced by the calibrate command and
committed; HSGN_CALIBRATION overrides it with an explicit path.
"""

from __future__ import annotations

import json
import os
from importlib import resources

from .errors import CalibrationError

ENV_CALIBRATION = "HSGN_CALIBRATION"


def load_calibration() -> dict:
    """The calibration dict, or {} when no file is available."""
    path = os.environ.get(ENV_CALIBRATION)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CalibrationError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise CalibrationError(f"{path}: expected a JSON object")
        return data
    ref = resources.files("hsgn").joinpath("data/calibration.json")
    if ref.is_file():
        return json.loads(ref.read_text(encoding="utf-8"))
    return {}
