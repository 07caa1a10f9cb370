"""Command-line front end: scenario files in, verdict records out.

Scenario files are JSON:

    {
      "spacetime": {"dim": 1, "c": 1.0},
      "seed": 7,
      "measures": {
        "mu":  {"time": 0.0, "atoms": [[0.0, 0.5], [1.5, 0.5]]},
        "nu0": {"time": 1.0, "grid": {"origin": [-8.0], "cell_size": 0.25,
                                      "weights": [0.0, "..."]}}
      },
      "measurement": {"K": [[[-0.25], [0.25]]], "p_plus": 0.5,
                      "mu": "mu", "nu0": "nu0", "nu1": "nu1",
                      "nu_plus": "nup", "nu_minus": "num"},
      "quantum":  {"dynamics": "schrodinger", "m": 1.0, "lambda": 1.0,
                   "t": 1.0, "grid": {"origin": -24.0, "cell_size": 0.0117,
                                      "n": 4096}, "K": [[[-2.41], [2.41]]]},
      "protocol": {"lattice": {"q_time": 2.0, "q_lo": [1.5], "q_hi": [4.5],
                               "q_points": 13, "p_time": -1.0, "p_lo": [-4.0],
                               "p_hi": [4.0], "p_points": 41,
                               "cover_resolution": 0.05},
                   "trials": 10000, "block_sizes": [1, 16]}
    }

Regions are lists of [lo, hi] box corner pairs.  Atom rows are coordinates
followed by a weight.  Every command prints one machine-readable JSON
record to stdout (sorted keys, floats with 17 significant digits); reports
are byte-identical across runs with the same inputs and seed except for
the wall_clock_s field.  --out writes the record (and any CSV series)
to files atomically.

Exit codes: 0 success; 1 a checked condition failed and --assert was
passed; 2 invalid input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path


class CliInputError(Exception):
    """Scenario file or flag combination is unusable (exit code 2)."""


# -- canonical JSON ----------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def canonical_json(obj, indent: int = 0) -> str:
    """Recursive writer: sorted keys, 17-significant-digit floats."""
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(f'{inner}"{key}": '
                         + canonical_json(obj[key], indent + 2))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + canonical_json(v, indent + 2) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, Fraction):
        return f'"{obj}"'
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- scenario ingestion -------------------------------------------------------


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise CliInputError(f"scenario is missing '{key}' in {where}")
    return mapping[key]


def _parse_measure(entry: dict, exact: bool, name: str):
    from .measure import SliceMeasure

    time_v = float(_require(entry, "time", f"measure '{name}'"))
    if "atoms" in entry:
        atoms = []
        for row in entry["atoms"]:
            if len(row) < 2:
                raise CliInputError(
                    f"measure '{name}': atom rows need coordinates + weight")
            w = Fraction(str(row[-1])) if exact else float(row[-1])
            atoms.append((tuple(float(v) for v in row[:-1]), w))
        return SliceMeasure.from_atoms(time_v, atoms)
    if "grid" in entry:
        if exact:
            raise CliInputError("exact-rational mode supports atom measures "
                                f"only; '{name}' is a grid")
        g = entry["grid"]
        import numpy as np

        return SliceMeasure.from_grid(
            time_v, [float(v) for v in _require(g, "origin", name)],
            float(_require(g, "cell_size", name)),
            np.asarray(_require(g, "weights", name), dtype=float))
    raise CliInputError(f"measure '{name}' needs 'atoms' or 'grid'")


def _parse_region(data, dim: int, where: str):
    from .region import Region

    try:
        return Region.from_json(data, dim=dim)
    except (ValueError, TypeError) as exc:
        raise CliInputError(f"bad region in {where}: {exc}") from exc


class Scenario:
    """Parsed scenario file: causal structure plus optional sections."""

    def __init__(self, path: str, exact: bool = False):
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise CliInputError(f"cannot read scenario file: {exc}") from exc
        self.digest = "sha256:" + hashlib.sha256(raw).hexdigest()
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CliInputError(f"scenario is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise CliInputError("scenario root must be an object")
        from .spacetime import CausalStructure

        st = _require(data, "spacetime", "the root")
        try:
            self.cs = CausalStructure(dim=int(_require(st, "dim", "spacetime")),
                                      c=float(st.get("c", 1.0)))
        except ValueError as exc:
            raise CliInputError(str(exc)) from exc
        self.seed = int(data.get("seed", 0))
        self.exact = exact
        self.measures = {
            name: _parse_measure(m, exact, name)
            for name, m in data.get("measures", {}).items()
        }
        self.measurement = data.get("measurement")
        self.quantum = data.get("quantum")
        self.protocol = data.get("protocol")

    def measurement_scenario(self):
        from .conditions import MeasurementScenario

        if self.measurement is None:
            raise CliInputError("scenario has no 'measurement' section")
        sect = self.measurement
        k = _parse_region(_require(sect, "K", "measurement"), self.cs.dim,
                          "measurement.K")
        p_raw = _require(sect, "p_plus", "measurement")
        p_plus = Fraction(str(p_raw)) if self.exact else float(p_raw)
        refs = {}
        for role in ("mu", "nu0", "nu1", "nu_plus", "nu_minus"):
            ref = _require(sect, role, "measurement")
            if ref not in self.measures:
                raise CliInputError(
                    f"measurement.{role} references unknown measure '{ref}'")
            refs[role] = self.measures[ref]
        try:
            return MeasurementScenario(cs=self.cs, K=k, p_plus=p_plus, **refs)
        except ValueError as exc:
            raise CliInputError(str(exc)) from exc

    def lattice(self):
        from .protocol import LatticeSpec

        if self.protocol is None or "lattice" not in self.protocol:
            raise CliInputError("scenario has no protocol.lattice section")
        lat = self.protocol["lattice"]
        try:
            return LatticeSpec(
                q_time=float(_require(lat, "q_time", "lattice")),
                q_lo=tuple(float(v) for v in _require(lat, "q_lo", "lattice")),
                q_hi=tuple(float(v) for v in _require(lat, "q_hi", "lattice")),
                q_points=int(_require(lat, "q_points", "lattice")),
                p_time=float(_require(lat, "p_time", "lattice")),
                p_lo=tuple(float(v) for v in _require(lat, "p_lo", "lattice")),
                p_hi=tuple(float(v) for v in _require(lat, "p_hi", "lattice")),
                p_points=int(_require(lat, "p_points", "lattice")),
                cover_resolution=float(_require(lat, "cover_resolution",
                                                "lattice")),
            )
        except (TypeError, ValueError) as exc:
            raise CliInputError(f"bad lattice: {exc}") from exc


# -- record plumbing ---------------------------------------------------------


def _region_json(region):
    return None if region is None else region.to_json()


def _verdict_json(v):
    return {
        "holds": v.holds,
        "deficit": v.deficit if isinstance(v.deficit, Fraction)
        else float(v.deficit),
        "worst_set": _region_json(v.worst_set),
        "method": v.method,
    }


def _tolerances() -> dict:
    from .measure import EPS_MASS
    from .spacetime import EPS_CAUSAL
    from .transport import EPS_FLOW

    return {"eps_causal": EPS_CAUSAL, "eps_mass": EPS_MASS,
            "eps_flow": EPS_FLOW}


def _emit(record: dict, args, csv_series: dict[str, str] | None = None) -> None:
    record["wall_clock_s"] = time.monotonic() - args._t0
    text = canonical_json(record) + "\n"
    sys.stdout.write(text)
    out = getattr(args, "out", None)
    if out:
        outdir = Path(out)
        _atomic_write(outdir / f"{record['command']}.json", text)
        for filename, content in (csv_series or {}).items():
            _atomic_write(outdir / filename, content)
    elif csv_series:
        for content in csv_series.values():
            sys.stdout.write(content)


def _thread_cap() -> int | None:
    raw = os.environ.get("CAUSAL_LAB_THREADS")
    if raw is None:
        return None
    try:
        cap = int(raw)
    except ValueError as exc:
        raise CliInputError(f"CAUSAL_LAB_THREADS={raw!r} is not an integer") \
            from exc
    if cap < 1:
        raise CliInputError("CAUSAL_LAB_THREADS must be >= 1")
    return cap


def _base_record(args, command: str, digest: str | None) -> dict:
    rec = {"command": command, "input_digest": digest,
           "tolerances": _tolerances()}
    cap = _thread_cap()
    if cap is not None:
        rec["thread_cap"] = cap
    return rec


# -- commands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    from .conditions import validate

    sc = Scenario(args.scenario, args.exact_rational)
    violations = validate(sc.measurement_scenario())
    rec = _base_record(args, "validate", sc.digest)
    rec["result"] = {"valid": not violations, "violations": violations}
    _emit(rec, args)
    return 1 if violations and getattr(args, "assert_", False) else 0


def cmd_check(args) -> int:
    from .conditions import check_ce, evaluate_conditions

    sc = Scenario(args.scenario, args.exact_rational)
    ms = sc.measurement_scenario()
    rec = _base_record(args, "check", sc.digest)
    rec["condition"] = args.condition
    rec["method"] = args.method
    if args.condition == "ce":
        verdict = check_ce(ms, method=args.method)
        rec["result"] = _verdict_json(verdict)
        failed = not verdict.holds
    else:
        report = evaluate_conditions(ms, method=args.method)
        flags = {"ce": report.ce, "ns": report.ns,
                 "a1": report.a1, "a2": report.a2}
        if args.condition == "all":
            wit = report.witnesses
            rec["result"] = {
                **flags,
                "a1_vacuous": report.a1_vacuous,
                "a2_vacuous": report.a2_vacuous,
                "ce_verdict": _verdict_json(report.ce_verdict),
                "ns_witness": _region_json(wit.get("ns_witness")),
                "diagnostics": list(report.diagnostics),
            }
            failed = not all(flags.values())
        else:
            rec["result"] = {args.condition: flags[args.condition]}
            failed = not flags[args.condition]
    _emit(rec, args)
    return 1 if failed and args.assert_ else 0


def cmd_truth_table(args) -> int:
    from .conditions import truth_table

    rows = truth_table()
    rec = _base_record(args, "truth-table", None)
    rec["result"] = {"rows": rows, "all_match": all(r["matches"] for r in rows)}
    _emit(rec, args)
    return 1 if not rec["result"]["all_match"] and args.assert_ else 0


def _build_protocol(sc: Scenario):
    from .conditions import find_ns_witness
    from .protocol import construct_protocol

    ms = sc.measurement_scenario()
    lattice = sc.lattice()
    witness = find_ns_witness(ms)
    if witness is None:
        raise LookupError("find_ns_witness found no marginal gap; "
                          "the scenario does not signal")
    return ms, lattice, construct_protocol(ms, witness, lattice)


def _protocol_json(proto) -> dict:
    return {
        "K": _region_json(proto.K),
        "C": _region_json(proto.C),
        "q": {"t": proto.q.t, "x": list(proto.q.x)},
        "senders": [{"t": p.t, "x": list(p.x)} for p in proto.senders],
        "k": len(proto.senders),
        "channel_gap": proto.channel_gap,
    }


def cmd_protocol(args) -> int:
    from .protocol import ProtocolSearchError, audit_protocol

    sc = Scenario(args.scenario, args.exact_rational)
    rec = _base_record(args, "protocol", sc.digest)
    try:
        ms, lattice, proto = _build_protocol(sc)
    except (LookupError, ProtocolSearchError) as exc:
        rec["result"] = {"constructed": False, "error": str(exc)}
        _emit(rec, args)
        return 1 if args.assert_ else 0
    problems = audit_protocol(proto, ms, lattice.cover_resolution)
    audit = ["audit: readout set inside the causal past of the receiver: "
             + ("ok" if not any("readout" in p for p in problems) else "FAIL"),
             "audit: sender futures cover the detector region: "
             + ("ok" if not any("cover" in p for p in problems) else "FAIL"),
             "audit: no sender causally precedes the receiver: "
             + ("ok" if not any("precedes the receiver" in p
                                for p in problems) else "FAIL"),
             f"audit: channel gap {proto.channel_gap:.6g} > 0: "
             + ("ok" if not any("gap" in p for p in problems) else "FAIL")]
    rec["result"] = {"constructed": True, "protocol": _protocol_json(proto),
                     "audit": audit, "problems": problems}
    _emit(rec, args)
    return 1 if problems and args.assert_ else 0


def cmd_signal_sim(args) -> int:
    from .protocol import ProtocolSearchError, simulate_signalling

    sc = Scenario(args.scenario, args.exact_rational)
    seed = args.seed if args.seed is not None else sc.seed
    rec = _base_record(args, "signal-sim", sc.digest)
    rec["seed"] = seed
    try:
        ms, _, proto = _build_protocol(sc)
    except (LookupError, ProtocolSearchError) as exc:
        raise CliInputError(f"cannot build a protocol to simulate: {exc}") \
            from exc
    sect = sc.protocol or {}
    trials = int(sect.get("trials", 10000))
    block_sizes = [int(b) for b in sect.get("block_sizes", [1])]
    stats = []
    lines = ["block_size,error_rate,stderr"]
    for i, block in enumerate(block_sizes):
        try:
            st = simulate_signalling(proto, ms, trials=trials,
                                     seed=seed + i, block_size=block)
        except ValueError as exc:
            raise CliInputError(str(exc)) from exc
        stats.append({"block_size": block, "trials": st.trials,
                      "error_rate": st.error_rate, "stderr": st.stderr,
                      "p_detect_off": st.p_detect_off,
                      "p_detect_on": st.p_detect_on,
                      "threshold": st.threshold})
        lines.append(f"{block},{_fmt_float(st.error_rate)},"
                     f"{_fmt_float(st.stderr)}")
    rec["result"] = {"protocol": _protocol_json(proto), "trials": trials,
                     "stats": stats}
    _emit(rec, args, csv_series={"signal_stats.csv": "\n".join(lines) + "\n"})
    return 0


def cmd_simulate_quantum(args) -> int:
    import numpy as np

    from .quantum import (
        NATURAL_UNITS,
        SI_UNITS,
        born_measure,
        bump_spinor_packet,
        evolve_dirac_1p1,
        evolve_relativistic,
        evolve_schrodinger_free,
        gaussian_packet,
    )
    from .transport import check_ce_maxflow

    sc = Scenario(args.scenario, args.exact_rational)
    if sc.quantum is None:
        raise CliInputError("scenario has no 'quantum' section")
    if sc.cs.dim != 1:
        raise CliInputError("quantum dynamics are one-dimensional; "
                            "set spacetime.dim = 1")
    q = sc.quantum
    dynamics = _require(q, "dynamics", "quantum")
    grid = _require(q, "grid", "quantum")
    units = {"natural": NATURAL_UNITS, "si": SI_UNITS}.get(
        q.get("units", "natural"))
    if units is None:
        raise CliInputError("quantum.units must be 'natural' or 'si'")
    try:
        m = float(_require(q, "m", "quantum"))
        lam = float(_require(q, "lambda", "quantum"))
        t = float(_require(q, "t", "quantum"))
        origin = float(_require(grid, "origin", "quantum.grid"))
        cell = float(_require(grid, "cell_size", "quantum.grid"))
        n = int(_require(grid, "n", "quantum.grid"))
        x0 = float(q.get("x0", 0.0))
        k0 = float(q.get("k0", 0.0))
        k_region = _parse_region(_require(q, "K", "quantum"), 1, "quantum.K")
        if dynamics == "dirac":
            psi0 = bump_spinor_packet(center=x0, halfwidth=lam, origin=origin,
                                      cell_size=cell, n=n, mass=m, units=units)
            evolved = evolve_dirac_1p1(psi0, t)
        elif dynamics in ("schrodinger", "relativistic"):
            psi0 = gaussian_packet(lam, x0=x0, k0=k0, origin=origin,
                                   cell_size=cell, n=n, mass=m, units=units)
            evolve = (evolve_schrodinger_free if dynamics == "schrodinger"
                      else evolve_relativistic)
            evolved = evolve(psi0, t)
        else:
            raise CliInputError(f"unknown dynamics {dynamics!r}")
        mu = born_measure(psi0, 0.0).restricted(k_region)
        nu = born_measure(evolved, t)
        verdict = check_ce_maxflow(mu, nu, sc.cs)
    except ValueError as exc:
        raise CliInputError(str(exc)) from exc
    rec = _base_record(args, "simulate-quantum", sc.digest)
    rec["result"] = {
        "dynamics": dynamics,
        "t": t,
        "norm_final": float(np.sum(evolved.density) * cell),
        "mass_in_K": float(mu.total),
        "ce": _verdict_json(verdict),
    }
    xs = psi0.centers
    dens = evolved.density
    lines = ["x,density"]
    lines.extend(f"{_fmt_float(float(x))},{_fmt_float(float(d))}"
                 for x, d in zip(xs, dens))
    _emit(rec, args, csv_series={"density.csv": "\n".join(lines) + "\n"})
    return 1 if not verdict.holds and args.assert_ else 0


def cmd_scales(args) -> int:
    from .quantum import NATURAL_UNITS, SI_UNITS, min_violation_halfwidth

    units = NATURAL_UNITS if args.units == "natural" else SI_UNITS
    t = math.inf if args.t.strip().lower() in ("inf", "infinity") \
        else float(args.t)
    try:
        report = min_violation_halfwidth(args.m, args.lam, t, units=units)
    except ValueError as exc:
        raise CliInputError(str(exc)) from exc
    rec = _base_record(args, "scales", None)
    rec["result"] = {
        "m": report.mass, "lambda": report.lam, "t": report.t,
        "ell_min": report.ell_min,
        "ell_min_asymptotic": report.ell_min_asymptotic,
        "compton": report.compton,
    }
    _emit(rec, args)
    return 0


# -- parser ------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, scenario: bool = True) -> None:
    if scenario:
        p.add_argument("--scenario", required=True,
                       help="path to a JSON scenario file")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 1 when the checked condition fails")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario seed")
    p.add_argument("--out", default=None,
                   help="directory for report and CSV files")
    p.add_argument("--exact-rational", action="store_true",
                   help="parse weights as exact rationals (atom measures)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causal-lab",
        description="causality checks for detection statistics on "
                    "spacetime slices")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("validate", help="scenario consistency check")
    _add_common(p)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("check", help="evaluate causality conditions")
    p.add_argument("condition", choices=["ce", "ns", "a1", "a2", "all"])
    p.add_argument("--method", choices=["auto", "bruteforce", "maxflow"],
                   default="auto")
    _add_common(p)
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("truth-table",
                       help="exact verdicts for the canonical two-atom family")
    _add_common(p, scenario=False)
    p.set_defaults(handler=cmd_truth_table)

    p = sub.add_parser("protocol", help="construct a signalling protocol")
    _add_common(p)
    p.set_defaults(handler=cmd_protocol)

    p = sub.add_parser("signal-sim", help="Monte Carlo of the one-bit channel")
    _add_common(p)
    p.set_defaults(handler=cmd_signal_sim)

    p = sub.add_parser("simulate-quantum",
                       help="evolve a packet and check the ordering condition")
    _add_common(p)
    p.set_defaults(handler=cmd_simulate_quantum)

    p = sub.add_parser("scales", help="closed-form violation scales")
    p.add_argument("--m", type=float, required=True, help="mass")
    p.add_argument("--lambda", dest="lam", type=float, required=True,
                   help="initial packet width")
    p.add_argument("--t", default="inf",
                   help="spreading time; 'inf' for the asymptote")
    p.add_argument("--units", choices=["si", "natural"], default="si")
    _add_common(p, scenario=False)
    p.set_defaults(handler=cmd_scales)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._t0 = time.monotonic()
    try:
        return args.handler(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
