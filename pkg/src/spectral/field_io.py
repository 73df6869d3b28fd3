"""
Raw binary export of spectral fields.

Coefficients go to a little-endian complex file (<name>.bin) and everything
needed to read them back goes to a JSON sidecar (<name>.json).
"""
import json
import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel

from src.spectral.grid import GridSpec, SpectralField

logger = logging.getLogger(__name__)

_DTYPES = {"complex64": "<c8", "complex128": "<c16"}


class FieldSidecar(BaseModel):
    grid: GridSpec
    components: int
    dtype: Literal["complex64", "complex128"] = "complex128"
    component_order: list[str]
    layout: str = "components-major, C order, unnormalized forward FFT"
    metadata: dict = {}


def _paths(path: str | Path) -> tuple[Path, Path]:
    base = Path(path).with_suffix("")
    return base.with_suffix(".bin"), base.with_suffix(".json")


def save_field(u: SpectralField, path: str | Path, dtype: str = "complex128") -> Path:
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported dtype {dtype}, expected one of {sorted(_DTYPES)}")
    bin_path, json_path = _paths(path)
    bin_path.parent.mkdir(parents=True, exist_ok=True)

    u.coeffs.astype(_DTYPES[dtype]).tofile(bin_path)
    sidecar = FieldSidecar(
        grid=u.grid,
        components=u.components,
        dtype=dtype,
        component_order=[f"u{i + 1}" for i in range(u.components)],
        metadata={k: v for k, v in u.metadata.items() if isinstance(v, (int, float, str, bool))},
    )
    json_path.write_text(sidecar.model_dump_json(indent=2))
    logger.debug(f"Wrote field {bin_path} ({dtype}, {u.components} components)")
    return bin_path


def load_field(path: str | Path) -> SpectralField:
    bin_path, json_path = _paths(path)
    if not json_path.exists():
        raise ValueError(f"missing sidecar {json_path}")
    sidecar = FieldSidecar.model_validate(json.loads(json_path.read_text()))
    raw = np.fromfile(bin_path, dtype=_DTYPES[sidecar.dtype])
    expected = sidecar.components * int(np.prod(sidecar.grid.shape))
    if raw.size != expected:
        raise ValueError(f"{bin_path} holds {raw.size} coefficients, sidecar expects {expected}")
    coeffs = raw.reshape((sidecar.components,) + sidecar.grid.shape)
    return SpectralField(sidecar.grid, coeffs, dict(sidecar.metadata, source=str(bin_path)))
