"""Application demand sets: seeded generation and JSON (de)serialisation.

Generation uses SplitMix64 so that any language can reproduce a workload
bit-for-bit. For each application, in id order, five draws are taken::

    cpu_ghz = CPU_CHOICES[u(3)]
    mem_gb  = MEM_CHOICES[u(5)]
    sto_gb  = STO_CHOICES[u(3)]
    cm_gbps = 300 + u(501)
    cd_gbps = 5 + u(124)

where ``u(k)`` is an unbiased integer in ``[0, k)`` obtained by rejection:
draw ``x``; if ``x >= 2**64 - (2**64 % k)`` draw again; else return ``x % k``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

CPU_CHOICES: tuple[float, ...] = (0.9, 1.8, 2.7)
MEM_CHOICES: tuple[float, ...] = (3.6, 7.2, 10.8, 26.0, 32.0)
STO_CHOICES: tuple[float, ...] = (80.0, 160.0, 240.0)
CM_RANGE = (300, 800)
CD_RANGE = (5, 128)

REFERENCE_SEED = 42
MASK64 = (1 << 64) - 1


class WorkloadError(ValueError):
    """Malformed or out-of-range workload data; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class Application:
    id: int
    cpu_ghz: float
    mem_gb: float
    sto_gb: float
    cm_gbps: int
    cd_gbps: int

    @property
    def total_flow_gbps(self) -> int:
        return self.cm_gbps + self.cd_gbps

    @property
    def demands(self) -> tuple[float, float, float]:
        """(cpu_ghz, mem_gb, sto_gb), in resource-kind order."""
        return (self.cpu_ghz, self.mem_gb, self.sto_gb)


class SplitMix64:
    """Steele/Lea/Flood SplitMix64; state advances by the golden gamma."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, k: int) -> int:
        if k <= 0:
            raise ValueError("k must be positive")
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % k


def generate_apps(seed: int, n: int) -> list[Application]:
    """Draw ``n`` applications uniformly over the standard demand sets."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    rng = SplitMix64(seed)
    apps = []
    for i in range(n):
        cpu = CPU_CHOICES[rng.below(len(CPU_CHOICES))]
        mem = MEM_CHOICES[rng.below(len(MEM_CHOICES))]
        sto = STO_CHOICES[rng.below(len(STO_CHOICES))]
        cm = CM_RANGE[0] + rng.below(CM_RANGE[1] - CM_RANGE[0] + 1)
        cd = CD_RANGE[0] + rng.below(CD_RANGE[1] - CD_RANGE[0] + 1)
        apps.append(Application(i, cpu, mem, sto, cm, cd))
    return apps


def check_app(app: Application) -> None:
    """Raise :class:`WorkloadError` naming the first out-of-range field."""
    if app.cpu_ghz not in CPU_CHOICES:
        raise WorkloadError("cpu_ghz", f"{app.cpu_ghz} not in {CPU_CHOICES}")
    if app.mem_gb not in MEM_CHOICES:
        raise WorkloadError("mem_gb", f"{app.mem_gb} not in {MEM_CHOICES}")
    if app.sto_gb not in STO_CHOICES:
        raise WorkloadError("sto_gb", f"{app.sto_gb} not in {STO_CHOICES}")
    for name, (lo, hi) in (("cm_gbps", CM_RANGE), ("cd_gbps", CD_RANGE)):
        value = getattr(app, name)
        if not lo <= value <= hi:
            raise WorkloadError(name, f"{value} outside [{lo}, {hi}]")


def _parse_entry(i: int, entry: Any) -> Application:
    if not isinstance(entry, dict):
        raise WorkloadError(f"[{i}]", "each application must be an object")
    fields = ("id", "cpu_ghz", "mem_gb", "sto_gb", "cm_gbps", "cd_gbps")
    for name in fields:
        if name not in entry:
            raise WorkloadError(name, f"missing in application {i}")
    extra = set(entry) - set(fields)
    if extra:
        raise WorkloadError(sorted(extra)[0], f"unknown key in application {i}")
    values = {}
    for name in fields:
        v = entry[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise WorkloadError(name, f"expected a number, got {v!r}")
        if name in ("id", "cm_gbps", "cd_gbps"):
            if int(v) != v:
                raise WorkloadError(name, f"expected an integer, got {v!r}")
            v = int(v)
        else:
            v = float(v)
        values[name] = v
    app = Application(**values)
    check_app(app)
    return app


def apps_from_json(data: Any) -> list[Application]:
    if not isinstance(data, list):
        raise WorkloadError("<root>", "workload must be a JSON array")
    apps = [_parse_entry(i, e) for i, e in enumerate(data)]
    ids = [a.id for a in apps]
    if ids != list(range(len(apps))):
        raise WorkloadError("id", f"ids must be 0..n-1 in order, got {ids}")
    return apps


def apps_to_json(apps: Iterable[Application]) -> list[dict[str, Any]]:
    return [asdict(a) for a in apps]


def dumps(apps: Sequence[Application]) -> str:
    return json.dumps(apps_to_json(apps), indent=2) + "\n"


def loads(text: str) -> list[Application]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorkloadError("<root>", f"invalid JSON: {exc}") from None
    return apps_from_json(data)


def roundtrip(apps: Sequence[Application]) -> list[Application]:
    """Serialise and parse back; the identity on valid input."""
    return loads(dumps(apps))


def save_apps(apps: Sequence[Application], path: str | Path) -> None:
    Path(path).write_text(dumps(apps), encoding="utf-8")


def load_apps(path: str | Path) -> list[Application]:
    return loads(Path(path).read_text(encoding="utf-8"))

