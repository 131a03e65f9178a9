"""Per-symbol frame schedules for the TDD, MDD and IBFD frame structures.

A schedule is plain immutable data: for every OFDM symbol it records which
link directions are active, on which subcarrier set, the usable fraction of
the symbol after switching losses, and which predictor supplies the CSI used
for data at that symbol.  Symbol indices are 1-based throughout.

Supported scheme names::

    TDD-1  TDD-1-NoP  TDD-1-ES  TDD-1-TG  MDD-1(z)  MDD-1-PA  IBFD-1
    TDD-2  TDD-2-TG   MDD-2
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

SCHEMES = ("TDD-1", "TDD-1-NoP", "TDD-1-ES", "TDD-1-TG", "MDD-1", "MDD-1-PA",
           "IBFD-1", "TDD-2", "TDD-2-TG", "MDD-2")

# Pilot positions are tabulated for T=28 only; other lengths use
# evenly spread gaps.
_PA_PILOTS = {28: (1, 5, 9, 14, 18, 23, 27)}


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Predictor:
    """CSI source for data sent at one symbol.

    ``kind`` is ``"none"``, ``"wp"`` (pilot-driven Wiener predictor),
    ``"ddwp"`` (decision-directed Wiener predictor) or ``"hold"`` (latest
    pilot estimate, no prediction).  ``observations`` lists the UL symbols
    used, most recent first.
    """

    kind: str = "none"
    observations: tuple = ()

    @property
    def order(self) -> int:
        return len(self.observations)

    def label(self) -> str:
        if self.kind == "none":
            return "-"
        obs = ",".join(str(j) for j in self.observations)
        return f"{self.kind.upper()}({self.order}: {obs})"


@dataclass(frozen=True)
class SymbolActivity:
    index: int
    dl: str = "off"          # off | data
    ul: str = "off"          # off | pilot | data
    weight: float = 0.0
    predictor: Predictor = field(default_factory=Predictor)
    dl_band: str = "DL"      # DL | all
    ul_band: str = "UL"      # UL | all

    @property
    def direction(self) -> str:
        if self.ul != "off":
            return "UL"
        if self.dl != "off":
            return "DL"
        return "idle"


@dataclass(frozen=True)
class FrameSchedule:
    scheme: str
    duplex: str              # TDD | MDD | IBFD
    n_symbols: int
    symbols: tuple
    n_pilots: int
    n_ul_data: int = 0
    kappa: int = 0
    wp_order: int = 0

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i: int) -> SymbolActivity:
        """Symbol with 1-based index ``i``."""
        return self.symbols[i - 1]

    @property
    def pilot_positions(self) -> tuple:
        return tuple(s.index for s in self.symbols if s.ul == "pilot")

    @property
    def ul_active(self) -> tuple:
        return tuple(s.index for s in self.symbols if s.ul != "off")

    def dl_active_at(self, i: int) -> bool:
        return 1 <= i <= self.n_symbols and self[i].dl != "off"

    def to_table(self) -> str:
        rows = [f"# {self.scheme} ({self.duplex}), T={self.n_symbols}",
                f"{'i':>3} {'DL':<9} {'UL':<10} {'weight':>6}  predictor"]
        for s in self.symbols:
            dl = f"data/{s.dl_band}" if s.dl != "off" else "off"
            ul = f"{s.ul}/{s.ul_band}" if s.ul != "off" else "off"
            rows.append(f"{s.index:>3} {dl:<9} {ul:<10} {s.weight:>6.1f}  {s.predictor.label()}")
        return "\n".join(rows)


def parse_scheme(name: str):
    """Split ``"MDD-1(3)"`` into ``("MDD-1", 3)``; other names get ``None``."""
    m = re.fullmatch(r"\s*([A-Za-z0-9-]+?)\s*(?:\((\d+)\))?\s*", name)
    if not m:
        raise ScheduleError(f"cannot parse scheme {name!r}")
    base, arg = m.group(1), m.group(2)
    canon = {s.upper(): s for s in SCHEMES}
    if base.upper() not in canon:
        raise ScheduleError(f"unknown scheme {name!r}")
    base = canon[base.upper()]
    if arg is not None and base != "MDD-1":
        raise ScheduleError(f"scheme {base} takes no order argument")
    return base, None if arg is None else int(arg)


def _recent(candidates, before: int, limit: int) -> tuple:
    obs = [j for j in candidates if j < before]
    return tuple(sorted(obs, reverse=True)[:limit])


def _tdd_weights(kinds: list) -> list:
    """Switching loss of each symbol in a cyclic TDD frame.

    ``kinds`` holds ``"pilot"``, ``"data"`` (UL) or ``"DL"`` per symbol.
    Every UL/DL direction change, including the wrap to the next frame,
    costs half a symbol: a DL symbol ahead of the switch pays it, UL data
    pays it when UL data hands over to DL, and after pilots the first DL
    symbol pays.
    """
    T = len(kinds)
    up = [k != "DL" for k in kinds]
    loss = [0.0] * T
    for a in range(T):
        b = (a + 1) % T
        if up[a] == up[b]:
            continue
        if kinds[a] == "DL" or kinds[a] == "data":
            loss[a] += 0.5
        else:
            loss[b] += 0.5
    return loss


def _pilot_positions_even(T: int, n: int) -> tuple:
    return tuple(1 + (k * T) // n for k in range(n))


def _pa_positions(T: int, n: int) -> tuple:
    if n == 7 and T in _PA_PILOTS:
        return _PA_PILOTS[T]
    return tuple(1 + (k * (T - 2)) // (n - 1) for k in range(n)) if n > 1 else (1,)


def _type1_tdd(scheme, T, pilots, n_pilots, hold=False):
    pilots = tuple(sorted(pilots))
    loss = _tdd_weights(["pilot" if i in pilots else "DL" for i in range(1, T + 1)])
    symbols = []
    for i in range(1, T + 1):
        if i in pilots:
            symbols.append(SymbolActivity(i, ul="pilot", ul_band="all"))
            continue
        if hold:
            pred = Predictor("hold", _recent(pilots, i, 1))
        else:
            pred = Predictor("wp", _recent(pilots, i, n_pilots))
        w = max(0.0, 1.0 - loss[i - 1])
        symbols.append(SymbolActivity(i, dl="data", weight=w, predictor=pred, dl_band="all"))
    return FrameSchedule(scheme, "TDD", T, tuple(symbols), n_pilots, wp_order=n_pilots)


def _type2_tdd(scheme, T, pilot_groups, data_groups, n_pilots, n_ul_data):
    """Type II TDD: each group is (pilot symbols, UL data symbols); DL fills the rest."""
    kinds = {}
    for pilots, data in zip(pilot_groups, data_groups):
        for j in pilots:
            kinds[j] = "pilot"
        for j in data:
            kinds[j] = "data"
    loss = _tdd_weights([kinds.get(i, "DL") for i in range(1, T + 1)])
    ul_syms = sorted(kinds)
    symbols = []
    for i in range(1, T + 1):
        pred = Predictor("ddwp", _recent(ul_syms, i, n_pilots))
        if kinds.get(i) == "pilot":
            symbols.append(SymbolActivity(i, ul="pilot", ul_band="all"))
        elif kinds.get(i) == "data":
            symbols.append(SymbolActivity(i, ul="data", weight=1.0 - loss[i - 1],
                                          predictor=pred, ul_band="all"))
        else:
            symbols.append(SymbolActivity(i, dl="data", weight=max(0.0, 1.0 - loss[i - 1]),
                                          predictor=pred, dl_band="all"))
    return FrameSchedule(scheme, "TDD", T, tuple(symbols), n_pilots, n_ul_data=n_ul_data)


def build_schedule(scheme: str, T: int = 28, n_pilots: int = 7, n_ul_data: int = 7,
                   kappa: int = 1) -> FrameSchedule:
    """Build the per-symbol schedule of ``scheme`` for a frame of ``T`` symbols.

    Parameters
    ----------
    scheme : str
        One of :data:`SCHEMES`; ``MDD-1`` accepts an order, e.g. ``"MDD-1(3)"``,
        and defaults to ``n_pilots``.
    T : int
        Symbols per frame.
    n_pilots : int
        Pilot symbols per frame (also the DD-WP order for Type II frames).
    n_ul_data : int
        UL data symbols of the TDD Type II frames.
    kappa : int
        First MDD-2 DL symbol is ``kappa + 1``.
    """
    base, order = parse_scheme(scheme)
    if T < 2 or n_pilots < 1:
        raise ScheduleError("need T >= 2 and at least one pilot")

    if base in ("TDD-1", "TDD-1-NoP"):
        if n_pilots + 2 > T:
            raise ScheduleError("TDD-1 needs n_pilots + 2 <= T")
        return _type1_tdd(base, T, range(1, n_pilots + 1), n_pilots, hold=base == "TDD-1-NoP")

    if base == "TDD-1-ES":
        if 2 * n_pilots > T:
            raise ScheduleError("TDD-1-ES needs at least one data symbol per pilot")
        return _type1_tdd(base, T, _pilot_positions_even(T, n_pilots), n_pilots)

    if base == "TDD-1-TG":
        g1 = (n_pilots + 1) // 2
        start2 = -(-T // 2)
        pilots = tuple(range(1, g1 + 1)) + tuple(range(start2, start2 + n_pilots - g1))
        if start2 <= g1 + 1 or pilots[-1] >= T:
            raise ScheduleError("frame too short for two pilot groups")
        return _type1_tdd(base, T, pilots, n_pilots)

    if base in ("MDD-1", "IBFD-1"):
        z = n_pilots if order is None else order
        if not 1 <= z < T:
            raise ScheduleError("MDD-1 order must be in 1..T-1")
        band = "all" if base == "IBFD-1" else "DL"
        symbols = []
        for i in range(1, T + 1):
            if i <= z:
                symbols.append(SymbolActivity(i, ul="pilot"))
            else:
                pred = Predictor("wp", tuple(range(i - 1, i - 1 - z, -1)))
                symbols.append(SymbolActivity(i, dl="data", ul="pilot", weight=1.0,
                                              predictor=pred, dl_band=band))
        name = base if base == "IBFD-1" else f"MDD-1({z})"
        duplex = "IBFD" if base == "IBFD-1" else "MDD"
        return FrameSchedule(name, duplex, T, tuple(symbols), z, wp_order=z)

    if base == "MDD-1-PA":
        pilots = _pa_positions(T, n_pilots)
        if len(set(pilots)) != n_pilots or pilots[-1] > T:
            raise ScheduleError("frame too short for the partial pilots")
        symbols = []
        for i in range(1, T + 1):
            is_pilot = i in pilots
            if i == 1:
                symbols.append(SymbolActivity(i, ul="pilot"))
                continue
            pred = Predictor("wp", _recent(pilots, i, 1))
            symbols.append(SymbolActivity(i, dl="data", ul="pilot" if is_pilot else "off",
                                          weight=1.0, predictor=pred,
                                          dl_band="DL" if is_pilot else "all"))
        return FrameSchedule(base, "MDD", T, tuple(symbols), n_pilots, wp_order=1)

    if base == "TDD-2":
        if n_pilots + n_ul_data + 2 > T:
            raise ScheduleError("TDD-2 needs n_pilots + n_ul_data + 2 <= T")
        pilots = range(1, n_pilots + 1)
        data = range(n_pilots + 1, n_pilots + n_ul_data + 2)
        return _type2_tdd(base, T, [pilots], [data], n_pilots, n_ul_data)

    if base == "TDD-2-TG":
        p1, u1 = (n_pilots + 1) // 2, (n_ul_data + 1) // 2
        p2, u2 = n_pilots - p1, n_ul_data - u1
        s2 = T // 2 + 1
        g1 = (range(1, p1 + 1), range(p1 + 1, p1 + u1 + 2))
        g2 = (range(s2, s2 + p2), range(s2 + p2, s2 + p2 + u2 + 1))
        if p1 + u1 + 2 >= s2 or s2 + p2 + u2 + 1 >= T:
            raise ScheduleError("frame too short for two pilot groups")
        return _type2_tdd(base, T, [g1[0], g2[0]], [g1[1], g2[1]], n_pilots, n_ul_data)

    if base == "MDD-2":
        if not 1 <= kappa <= n_pilots or n_pilots >= T:
            raise ScheduleError("MDD-2 needs 1 <= kappa <= n_pilots < T")
        symbols = []
        for i in range(1, T + 1):
            if i <= n_pilots:
                if i <= kappa:
                    symbols.append(SymbolActivity(i, ul="pilot"))
                else:
                    pred = Predictor("wp", tuple(range(i - 1, 0, -1))[:n_pilots])
                    symbols.append(SymbolActivity(i, dl="data", ul="pilot", weight=1.0,
                                                  predictor=pred))
            else:
                pred = Predictor("ddwp", tuple(range(i - 1, i - 1 - n_pilots, -1)))
                symbols.append(SymbolActivity(i, dl="data", ul="data", weight=1.0,
                                              predictor=pred))
        return FrameSchedule(base, "MDD", T, tuple(symbols), n_pilots,
                             n_ul_data=T - n_pilots, kappa=kappa)

    raise ScheduleError(f"unknown scheme {scheme!r}")  # pragma: no cover


def switching_boundaries(schedule: FrameSchedule) -> int:
    """Direction changes around the cyclic frame (UL <-> DL)."""
    dirs = [s.direction for s in schedule.symbols]
    T = len(dirs)
    return sum(1 for a in range(T) if dirs[a] != dirs[(a + 1) % T])


def validate_schedule(s: FrameSchedule) -> list:
    """Return every invariant violation of ``s`` as a message (empty if valid)."""
    problems = []
    T = s.n_symbols
    if len(s.symbols) != T:
        problems.append(f"schedule lists {len(s.symbols)} symbols, expected {T}")
    for pos, sym in enumerate(s.symbols, start=1):
        if sym.index != pos:
            problems.append(f"symbol {pos}: index recorded as {sym.index}")
        if sym.dl not in ("off", "data") or sym.ul not in ("off", "pilot", "data"):
            problems.append(f"symbol {pos}: unknown activity {sym.dl}/{sym.ul}")
        if sym.weight not in (0.0, 0.5, 1.0):
            problems.append(f"symbol {pos}: weight {sym.weight} not in {{0, 0.5, 1}}")
        has_data = sym.dl == "data" or sym.ul == "data"
        if not has_data and sym.weight != 0:
            problems.append(f"symbol {pos}: weight on a symbol without data")
        if s.duplex == "TDD" and sym.dl != "off" and sym.ul != "off":
            problems.append(f"symbol {pos}: duplex conflict")
        if s.duplex != "TDD" and sym.weight == 0.5:
            problems.append(f"symbol {pos}: switching loss in switch-free scheme")
        if any(not 1 <= j < pos for j in sym.predictor.observations):
            problems.append(f"symbol {pos}: predictor uses a non-causal observation")
        if any(s[j].ul == "off" for j in sym.predictor.observations if 1 <= j <= T):
            problems.append(f"symbol {pos}: predictor observes a symbol without UL")
    pilots = s.pilot_positions
    if list(pilots) != sorted(set(pilots)) or any(not 1 <= p <= T for p in pilots):
        problems.append("pilot positions not strictly increasing within 1..T")
    if s.duplex == "TDD":
        dirs = [sym.direction for sym in s.symbols]
        for sym in s.symbols:
            if sym.weight == 0.5:
                i = sym.index - 1
                if dirs[i - 1] == dirs[i] == dirs[(i + 1) % T]:
                    problems.append(f"symbol {sym.index}: half weight away from a switch")
        lost = sum(1.0 - sym.weight for sym in s.symbols if sym.ul != "pilot")
        if abs(lost - 0.5 * switching_boundaries(s)) > 1e-12:
            problems.append("switching losses do not match the number of UL/DL switches")
    return problems
