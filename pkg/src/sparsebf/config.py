"""Flat ``key = value`` files for scenarios, experiments and run manifests.

Grammar (UTF-8, one entry per line)::

    # comment                      full-line comments start with '#'
    key = value                    whitespace around '=' is ignored
    list_key = 1.5, -10, 10        lists are comma separated

Keys are case-insensitive and may contain ``[a-z0-9_]``. Blank lines are
skipped; a repeated key is an error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .numerics import ValidationError
from .signal_model import Scenario

_KEY = re.compile(r"^[a-z][a-z0-9_]*$")


def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if not _KEY.match(key):
            raise ValidationError(f"{source}:{lineno}: bad key {key!r}")
        if key in out:
            raise ValidationError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_kv(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    return parse_kv(text, str(path))


def format_kv(entries: dict) -> str:
    lines = []
    for key, value in entries.items():
        if isinstance(value, (list, tuple)):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def write_kv(path, entries: dict) -> None:
    Path(path).write_text(format_kv(entries), encoding="utf-8")


def parse_floats(value: str) -> list[float]:
    value = value.strip()
    if not value:
        return []
    try:
        return [float(v) for v in value.split(",")]
    except ValueError as exc:
        raise ValidationError(f"expected a comma-separated list of numbers, got {value!r}") from exc


def _get(kv, key, conv, default=None):
    if key not in kv:
        if default is None:
            raise ValidationError(f"missing required key {key!r}")
        return default
    try:
        return conv(kv[key])
    except ValueError as exc:
        raise ValidationError(f"bad value for {key!r}: {kv[key]!r}") from exc


def _bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a scenario file can hold.

    Required keys: ``m``, ``soi_doa_deg``, ``snr_db``. Optional:
    ``inr_db`` (default 20, shared), ``interferer_doas_deg`` (default none),
    ``interferer_inrs_db`` (per-interferer override), ``snapshots``
    (default 100), ``seed`` (default 0), ``L`` (default 4), solver keys
    ``lambda``, ``rho``, ``epsilon``, ``eta``, ``k_max``, ``variant``
    (``l1`` or ``reweighted``) and ``use_true_cov``.
    """

    m: int
    soi_doa_deg: float
    snr_db: float
    inr_db: float = 20.0
    interferer_doas_deg: tuple[float, ...] = ()
    interferer_inrs_db: tuple[float, ...] | None = None
    snapshots: int = 100
    seed: int = 0
    L: int = 4
    lam: float = 1.0
    rho: float | None = None
    epsilon: float = 1e-10
    eta: float = 1e-12
    k_max: int = 1000
    variant: str = "reweighted"
    use_true_cov: bool = False
    extra: dict = field(default_factory=dict)

    def scenario(self, **override) -> Scenario:
        doas = override.get("interferer_doas_deg", self.interferer_doas_deg)
        inrs = self.interferer_inrs_db if self.interferer_inrs_db is not None else self.inr_db
        if "inr_db" in override:
            inrs = override["inr_db"]
        return Scenario.from_db(
            m=override.get("m", self.m),
            soi_doa=override.get("soi_doa_deg", self.soi_doa_deg),
            snr_db=override.get("snr_db", self.snr_db),
            interferer_doas=doas,
            inr_db=inrs,
        )

    def as_dict(self) -> dict:
        d = {
            "m": self.m,
            "soi_doa_deg": self.soi_doa_deg,
            "snr_db": self.snr_db,
            "inr_db": self.inr_db,
            "interferer_doas_deg": list(self.interferer_doas_deg),
            "snapshots": self.snapshots,
            "seed": self.seed,
            "l": self.L,
            "lambda": self.lam,
            "rho": "bound" if self.rho is None else self.rho,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "k_max": self.k_max,
            "variant": self.variant,
            "use_true_cov": self.use_true_cov,
        }
        if self.interferer_inrs_db is not None:
            d["interferer_inrs_db"] = list(self.interferer_inrs_db)
        return d


_SCENARIO_KEYS = {
    "m", "soi_doa_deg", "snr_db", "inr_db", "interferer_doas_deg", "interferer_inrs_db", "snapshots",
    "seed", "l", "lambda", "rho", "epsilon", "eta", "k_max", "variant", "use_true_cov",
}


def scenario_from_kv(kv: dict[str, str]) -> ScenarioConfig:
    doas = tuple(parse_floats(kv.get("interferer_doas_deg", "")))
    inrs = kv.get("interferer_inrs_db")
    inrs = tuple(parse_floats(inrs)) if inrs is not None else None
    if inrs is not None and len(inrs) != len(doas):
        raise ValidationError("interferer_inrs_db must have one entry per interferer DOA")
    rho = kv.get("rho", "bound").strip().lower()
    variant = kv.get("variant", "reweighted").strip().lower()
    if variant not in ("l1", "reweighted"):
        raise ValidationError(f"unknown variant {variant!r}")
    cfg = ScenarioConfig(
        m=_get(kv, "m", int),
        soi_doa_deg=_get(kv, "soi_doa_deg", float),
        snr_db=_get(kv, "snr_db", float),
        inr_db=_get(kv, "inr_db", float, 20.0),
        interferer_doas_deg=doas,
        interferer_inrs_db=inrs,
        snapshots=_get(kv, "snapshots", int, 100),
        seed=_get(kv, "seed", int, 0),
        L=_get(kv, "l", int, 4),
        lam=_get(kv, "lambda", float, 1.0),
        rho=None if rho == "bound" else _get(kv, "rho", float),
        epsilon=_get(kv, "epsilon", float, 1e-10),
        eta=_get(kv, "eta", float, 1e-12),
        k_max=_get(kv, "k_max", int, 1000),
        variant=variant,
        use_true_cov=_get(kv, "use_true_cov", _bool, False),
        extra={k: v for k, v in kv.items() if k not in _SCENARIO_KEYS},
    )
    cfg.scenario()  # validate ranges early
    if cfg.snapshots < 1:
        raise ValidationError("snapshots must be >= 1")
    return cfg


def load_scenario(path) -> ScenarioConfig:
    return scenario_from_kv(read_kv(path))
