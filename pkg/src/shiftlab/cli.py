"""Command line front end: ``shiftlab <group> <verb> [options]``.

Exit status 0 on success, 2 when a precondition or validation fails and 1
for I/O and format errors.  Failures print one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import coded, metrics, proximal, pseudo_orbits as po, sofic
from .errors import ParseError, ShiftLabError
from .seq_core import SymSequence, dump_index_csv, format_sequence, parse_sequence

_SHIFT_NAME = re.compile(r"^Z(\d+)$")
_PAREN = re.compile(r"^([01]*)\(([01]+)\)$")


def _budget(default: int) -> int:
    v = os.environ.get("SHIFTLAB_BUDGET")
    if not v:
        return default
    try:
        return min(default, int(v))
    except ValueError as exc:
        raise ParseError("SHIFTLAB_BUDGET must be an integer") from exc


# ---------------------------------------------------------------------------
# input helpers

def _read_text(path) -> str:
    return Path(path).read_text()


def read_sequence(path) -> SymSequence:
    """Sequence file, a bare word (finite) or ``prefix(period)``."""
    text = _read_text(path)
    if text.startswith("#prefix="):
        return parse_sequence(text)
    body = "".join(text.split())
    m = _PAREN.match(body)
    if m:
        return SymSequence(m.group(1), m.group(2))
    if set(body) - set("01"):
        raise ParseError(f"{path}: not a binary word or sequence file")
    return SymSequence(body)


def read_word(path) -> str:
    x = read_sequence(path)
    if x.period is not None:
        raise ParseError(f"{path}: expected a finite word")
    return x.prefix


def read_words(path) -> list:
    out = []
    for ln in _read_text(path).splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if set(ln) - set("01"):
            raise ParseError(f"{path}: bad word line {ln[:40]!r}")
        out.append(ln)
    return out


def read_family(directory) -> list:
    """Family members in name order; digits in names compare numerically."""
    d = Path(directory)
    if not d.is_dir():
        raise ParseError(f"{directory}: not a directory")
    def key(p):
        return [int(s) if s.isdigit() else s for s in re.split(r"(\d+)", p.name)]
    files = sorted((p for p in d.iterdir() if p.is_file()), key=key)
    if not files:
        raise ParseError(f"{directory}: empty family directory")
    return [read_word(p) for p in files]


def load_shift(spec: str):
    """A built-in name such as ``Z1`` or a graph JSON file."""
    m = _SHIFT_NAME.match(spec)
    if m:
        return proximal.zshift(int(m.group(1)))
    try:
        g = sofic.LabeledGraph.from_json(_read_text(spec))
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"{spec}: bad graph file") from exc
    return sofic.SoficShift(g, Path(spec).stem)


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"expected comma separated integers, got {text!r}") from exc


def _frac_list(text: str) -> list:
    try:
        return [Fraction(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"expected comma separated rationals, got {text!r}") from exc


def read_pointseq(path) -> po.PointSeq:
    with open(path) as fh:
        return po.load_pointseq(fh)


def _emit(text: str, out=None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _dump_json(obj, out=None):
    _emit(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", out)


# ---------------------------------------------------------------------------
# metrics

def _sweep(fn, Ls, jobs):
    if jobs > 1 and len(Ls) > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(fn, Ls))
    return [fn(L) for L in Ls]


def cmd_metrics(a):
    if a.verb == "rho":
        x, y = read_sequence(a.a), read_sequence(a.b)
        print(metrics.rho(x, y))
        return
    Ls = _int_list(a.L)
    if a.verb in ("dbar", "distb"):
        x, y = read_sequence(a.a), read_sequence(a.b)
        if a.verb == "dbar":
            fn = lambda L: metrics.dbar_estimate(x, y, L)  # noqa: E731
        else:
            fn = lambda L: metrics.dist_B_window(x, y, L, a.lookahead)  # noqa: E731
    else:
        xs = read_pointseq(a.a)
        zs = read_pointseq(a.b)
        fn = lambda L: metrics.rho_B_prime_window(xs, zs, L)  # noqa: E731
    ests = _sweep(fn, Ls, a.jobs)
    if a.out:
        _emit("L,value_low,value_high,kind\n" + "".join(e.csv_row() + "\n" for e in ests), a.out)
    for e in ests:
        print(e.low if e.exact else f"[{e.low}, {e.high}]")


# ---------------------------------------------------------------------------
# sofic

def cmd_sofic(a):
    x = load_shift(a.shift)
    if a.verb == "member":
        print("true" if sofic.member(x, a.word) else "false")
    elif a.verb == "enum":
        words = sorted(sofic.enumerate_language(x, a.n, _budget(1 << 20)))
        _emit("".join(w + "\n" for w in words), a.out)
    elif a.verb == "chainmix":
        print("true" if sofic.is_chain_mixing(x, a.m, _budget(1 << 16)) else "false")
    elif a.verb == "sync":
        r = sofic.is_synchronizing(x, a.word, _budget(a.det_budget), a.test_len)
        _dump_json({"status": r.status, "mode": r.mode, "witness": r.witness, "explored": r.explored})
    elif a.verb == "trace":
        p, cost = sofic.min_hamming_trace(x, a.word)
        _dump_json({"word": p, "mismatches": cost})


# ---------------------------------------------------------------------------
# pseudo-orbits

def cmd_po(a):
    if a.verb == "gen":
        x = load_shift(a.shift)
        xs = po.random_pseudo_orbit(x, a.L, a.density, random.Random(a.seed))
        with open(a.out, "w") as fh:
            po.dump_pointseq(xs, fh)
        return
    if a.verb == "words2po":
        x = load_shift(a.shift)
        r = po.words_to_avg_po(read_words(a.words), x, m=a.m, delta=a.delta)
        with open(a.out, "w") as fh:
            po.dump_pointseq(r.points, fh)
        _dump_json({"delta_guarantee": r.delta, "m": r.m, "N": r.N,
                    "exceptions": r.exceptions.members(len(r.points))})
        return
    xs = read_pointseq(a.po)
    if a.verb == "po2words":
        words = po.po_to_words(xs, a.m)
        _emit("".join(w + "\n" for w in words), a.out)
    elif a.verb == "check":
        _po_check(a, xs)
    elif a.verb == "repair":
        x = load_shift(a.shift)
        z, mod, rep = po.repair_aapo(xs, x, a.m, a.L)
        with open(a.out, "w") as fh:
            po.dump_pointseq(z, fh)
        _dump_json({"bad_junctions": rep.bad_junctions, "modified": mod.members(a.L + 1),
                    "max_connector": rep.max_connector, "modified_density": rep.modified_density})
    elif a.verb == "verdict":
        z = read_sequence(a.z)
        r = po.trace_verdict(xs, z, a.L, _frac_list(a.eps))
        _dump_json({"window": r.window, "value_low": r.low, "value_high": r.high,
                    "densities": r.densities})


def _po_check(a, xs):
    L = a.L if a.L is not None else len(xs) - 1
    if a.kind == "delta":
        r = po.check_delta_po(xs, Fraction(a.delta), L)
    elif a.kind == "asymptotic":
        base = Fraction(a.delta)
        r = po.check_asymptotic_po(xs, lambda n: base / (1 << n), L)
    elif a.kind == "avg":
        L = a.L if a.L is not None else len(xs) - 1 - a.K
        r = po.check_delta_avg_po(xs, Fraction(a.delta), a.N, a.K, L)
    elif a.kind == "aapo":
        r = po.check_aapo(xs, _frac_list(a.eps), L, Fraction(a.tol))
    else:
        ks = _int_list(a.k)
        L = a.L if a.L is not None else len(xs) - max(ks)
        rows = po.vague_curve(xs, [(e, k) for e in _frac_list(a.eps) for k in ks], L)
        if a.out:
            _emit("eps,k,density\n" + "".join(f"{e},{k},{d}\n" for e, k, d in rows), a.out)
        _dump_json({"kind": "vague", "window": L, "curve": [[e, k, d] for e, k, d in rows]})
        return
    if a.out:
        errs, _ = po.step_errors(xs, L)
        _emit("n,error\n" + "".join(f"{n},{e}\n" for n, e in enumerate(errs)), a.out)
    _dump_json({"kind": r.kind, "window": r.window, "verdict": r.verdict, "witness": r.witness,
                "data": r.data})


# ---------------------------------------------------------------------------
# proximal

def cmd_proximal(a):
    if a.verb == "build":
        lvl = proximal.build_Gn(a.n)
        _emit(lvl.graph.to_json() + "\n", a.out)
    elif a.verb == "member":
        print("true" if proximal.member_Zn(a.word, a.n) else "false")
    elif a.verb == "eset":
        A = proximal.E_set(a.i, a.L)
        if a.out:
            with open(a.out, "w") as fh:
                dump_index_csv(A, a.L, fh)
        c = A.count(a.L)
        print(f"{c}/{a.L}")
    elif a.verb == "project":
        print(proximal.project_to_Z(a.word, a.n))
    elif a.verb == "limit":
        fam = read_family(a.family)
        x, cert = proximal.dbar_limit_proximal(fam, a.L, connector=a.connector)
        seq = SymSequence(x, "0") if cert.point_in_Z else SymSequence(x)
        _emit(format_sequence(seq), a.out)
        _dump_json(cert.to_dict(), a.cert)
        if not cert.ok:
            raise _Failed("certificate has violations", failures=len(cert.failures()))


# ---------------------------------------------------------------------------
# coded

class _Failed(ShiftLabError):
    code = "check-failed"


def _system(a) -> coded.CodeSystem:
    t = _int_list(a.t) if a.t else [coded.min_valid_t([], 1)]
    # the last supplied value repeats
    t = t + [t[-1]] * 32
    return coded.CodeSystem(t, _budget(coded.EXPLICIT_WORDS))


def cmd_coded(a):
    if a.verb == "mint":
        print(coded.min_valid_t(_int_list(a.t) if a.t else [], a.n))
        return
    if a.verb == "stats":
        t = _int_list(a.t)
        rows = []
        for n in range(1, a.n + 1):
            st = coded.level_stats(t, n)
            rows.append({"n": n, "s": st.s, "l": st.l, "k": st.k, "tau": st.tau_len,
                         "ratio": coded.ratio(st)})
        _dump_json(rows)
        return
    system = _system(a)
    if a.verb == "build":
        if a.mode == "lazy":
            st = system.stats(a.n)
            _dump_json({"n": a.n, "s": st.s, "l": st.l, "k": st.k, "tau": st.tau_len})
            return
        lvl = system.level(a.n)
        with open(a.out, "w") as fh:
            coded.dump_level(lvl, system.t_seq, fh)
    elif a.verb == "word":
        lvl = system.level(a.n)
        if a.length is not None:
            print(lvl.word_of_length(a.length))
        else:
            print(lvl.random_word(random.Random(a.seed)))
    elif a.verb == "connect":
        ws = coded.connecting_words(system.level(a.n), a.b1, a.b2, a.alpha)
        print(" ".join(ws))
    elif a.verb == "approx":
        x = read_word(a.x)
        w, mis = coded.approx_word(x, system.level(a.n), system.t(a.n))
        _emit(w + "\n", a.out)
        st = system.stats(a.n)
        _dump_json({"length": len(w), "mismatches": mis, "bound": 3 * st.l + st.tau_len})
    elif a.verb == "extend":
        u, x = read_word(a.u), read_word(a.x)
        w, cert = coded.extend_word(u, x, a.n, a.m, system, waive=a.waive)
        _emit(w + "\n", a.out)
        _dump_json(cert.to_dict(), a.cert)
        if not cert.ok:
            raise _Failed("extension certificate has violations")
    elif a.verb == "limit":
        fam = read_family(a.family)
        w, cert = coded.dbar_limit_minimal(fam, system, min_first_level=a.min_first_level,
                                           waive=a.waive)
        _emit(w + "\n", a.out)
        _dump_json(cert.to_dict(), a.cert)
        if not cert.ok:
            raise _Failed("certificate has violations", failures=len(cert.failures()))


# ---------------------------------------------------------------------------
# parser

def _common() -> argparse.ArgumentParser:
    # accepted before or after the verb; SUPPRESS keeps the top-level default
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    c.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    return c


def _leaf(g, name):
    return g.add_parser(name, parents=[_common()])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shiftlab", description="Shift spaces, pseudo-orbits and "
                                "d-bar limit constructions.")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for window sweeps")
    p.add_argument("--seed", type=int, default=0)
    groups = p.add_subparsers(dest="group", required=True)

    g = groups.add_parser("metrics").add_subparsers(dest="verb", required=True)
    s = _leaf(g, "rho")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    for name in ("dbar", "distb", "rhobp"):
        s = _leaf(g, name)
        s.add_argument("--a", required=True, help="sequence file (point sequence for rhobp)")
        s.add_argument("--b", required=True)
        s.add_argument("--L", required=True, help="window length or comma separated list")
        s.add_argument("--out", help="CSV output L,value_low,value_high,kind")
        if name == "distb":
            s.add_argument("--lookahead", type=int, default=64)

    g = groups.add_parser("sofic").add_subparsers(dest="verb", required=True)
    for name in ("member", "enum", "chainmix", "sync", "trace"):
        s = _leaf(g, name)
        s.add_argument("--shift", "--graph", dest="shift", required=True,
                       help="graph JSON file or built-in name Z<n>")
        if name in ("member", "sync", "trace"):
            s.add_argument("--word", required=True)
        if name == "enum":
            s.add_argument("--n", type=int, required=True)
            s.add_argument("--out")
        if name == "chainmix":
            s.add_argument("--m", type=int, required=True)
        if name == "sync":
            s.add_argument("--det-budget", type=int, default=1 << 12)
            s.add_argument("--test-len", type=int, default=8)

    g = groups.add_parser("po").add_subparsers(dest="verb", required=True)
    s = _leaf(g, "gen")
    s.add_argument("--shift", default="Z1")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--density", type=float, default=0.0)
    s.add_argument("--out", required=True)
    s = _leaf(g, "words2po")
    s.add_argument("--shift", default="Z1")
    s.add_argument("--words", required=True)
    s.add_argument("--m", type=int)
    s.add_argument("--delta", type=Fraction)
    s.add_argument("--out", required=True)
    s = _leaf(g, "po2words")
    s.add_argument("--po", required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--out")
    s = _leaf(g, "check")
    s.add_argument("--po", required=True)
    s.add_argument("--kind", choices=("delta", "asymptotic", "avg", "aapo", "vague"), default="delta")
    s.add_argument("--delta", default="1/2")
    s.add_argument("--N", type=int, default=1)
    s.add_argument("--K", type=int, default=0)
    s.add_argument("--k", default="1")
    s.add_argument("--eps", default="1/2")
    s.add_argument("--tol", default="0")
    s.add_argument("--L", type=int)
    s.add_argument("--out", help="CSV of n,error (eps,k,density for --kind vague)")
    s = _leaf(g, "repair")
    s.add_argument("--po", required=True)
    s.add_argument("--shift", default="Z1")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--out", required=True)
    s = _leaf(g, "verdict")
    s.add_argument("--po", required=True)
    s.add_argument("--z", required=True)
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--eps", default="1/2")

    g = groups.add_parser("proximal").add_subparsers(dest="verb", required=True)
    s = _leaf(g, "build")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out")
    s = _leaf(g, "member")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--word", required=True)
    s = _leaf(g, "eset")
    s.add_argument("--i", type=int, required=True)
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--out")
    s = _leaf(g, "project")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--word", required=True)
    s = _leaf(g, "limit")
    s.add_argument("--family", required=True)
    s.add_argument("--L", type=int)
    s.add_argument("--connector", choices=("window", "sync"), default="window")
    s.add_argument("--out")
    s.add_argument("--cert")

    g = groups.add_parser("coded").add_subparsers(dest="verb", required=True)
    s = _leaf(g, "stats")
    s.add_argument("--t", required=True)
    s.add_argument("--n", type=int, required=True)
    s = _leaf(g, "mint")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", help="t(1), ..., t(n-1)")
    for name in ("build", "word", "connect", "approx", "extend", "limit"):
        s = _leaf(g, name)
        s.add_argument("--t", help="comma separated t(1), t(2), ... (last value repeats)")
        if name != "limit":
            s.add_argument("--n", type=int, required=True)
        if name == "build":
            s.add_argument("--mode", choices=("explicit", "lazy"), default="explicit")
            s.add_argument("--out")
        elif name == "word":
            s.add_argument("--length", type=int)
        elif name == "connect":
            s.add_argument("--b1", required=True)
            s.add_argument("--b2", required=True)
            s.add_argument("--alpha", type=int, required=True)
        elif name == "approx":
            s.add_argument("--x", required=True)
            s.add_argument("--out")
        elif name == "extend":
            s.add_argument("--u", required=True)
            s.add_argument("--x", required=True)
            s.add_argument("--m", type=int, required=True)
            s.add_argument("--waive", action="store_true")
            s.add_argument("--out")
            s.add_argument("--cert")
        elif name == "limit":
            s.add_argument("--family", required=True)
            s.add_argument("--min-first-level", type=int, default=4)
            s.add_argument("--waive", action="store_true")
            s.add_argument("--out")
            s.add_argument("--cert")
    return p


_HANDLERS = {"metrics": cmd_metrics, "sofic": cmd_sofic, "po": cmd_po,
             "proximal": cmd_proximal, "coded": cmd_coded}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.group == "coded" and args.verb == "build" and args.mode == "explicit" and not args.out:
        args.out = "/dev/stdout"
    try:
        _HANDLERS[args.group](args)
    except ParseError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 1
    except ShiftLabError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io-error", "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
