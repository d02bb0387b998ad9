"""File formats: lattice files, polyhedron families, run records, Grayson CSV/SVG."""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from .convex import Polyhedron
from .errors import PreconditionError
from .lattice import Lattice

UNIMODULAR_TOL = 1e-9


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def digest_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


# --------------------------------------------------------------------------- lattice files


def _parse_entry(v, mode):
    if isinstance(v, bool):
        raise PreconditionError(f"boolean basis entry {v!r}")
    if mode == "rational":
        if isinstance(v, int):
            return v
        if isinstance(v, str):
            try:
                if any(c in v for c in ".eE"):
                    raise ValueError
                return Fraction(v.strip())
            except (ValueError, ZeroDivisionError):
                raise PreconditionError(f"not an exact rational: {v!r}") from None
        raise PreconditionError(f"rational mode needs integers or 'p/q' strings, got {v!r}")
    try:
        if isinstance(v, str):
            return float(Fraction(v.strip())) if "/" in v else float(v)
        return float(v)
    except (ValueError, ZeroDivisionError, TypeError):
        raise PreconditionError(f"unparseable basis entry {v!r}") from None


def lattice_from_dict(d):
    """Build ``(Lattice, metadata)`` from a LatticeFile dictionary."""
    if not isinstance(d, dict):
        raise PreconditionError("lattice file must be a JSON object")
    try:
        n = int(d["n"])
        rows = d["basis"]
    except (KeyError, TypeError, ValueError):
        raise PreconditionError("lattice file needs integer 'n' and a 'basis' matrix") from None
    mode = d.get("mode", "float")
    if mode not in ("float", "rational"):
        raise PreconditionError(f"mode must be 'float' or 'rational', got {mode!r}")
    if not isinstance(rows, list) or len(rows) != n or any(
        not isinstance(r, list) or len(r) != n for r in rows
    ):
        raise PreconditionError(f"basis must be a {n}x{n} row-major matrix")
    basis = [[_parse_entry(v, mode) for v in r] for r in rows]
    unimodular = bool(d.get("unimodular", False))
    L = Lattice(basis)
    if unimodular and not L.is_unimodular(UNIMODULAR_TOL):
        raise PreconditionError(f"declared unimodular but |det| = {abs(L.det)!r}")
    meta = dict(d.get("metadata") or {})
    return L, {"mode": mode, "unimodular": unimodular, "metadata": meta}


def lattice_to_dict(L: Lattice, metadata=None, unimodular=None):
    mode = "rational" if L.is_exact else "float"
    if unimodular is None:
        unimodular = L.is_unimodular(UNIMODULAR_TOL)
    return {
        "n": L.n,
        "basis": L.rows_as_strings(),
        "mode": mode,
        "unimodular": bool(unimodular),
        "metadata": dict(metadata or {}),
    }


def read_lattice_file(path):
    """Returns ``(Lattice, info, raw bytes)``."""
    raw = Path(path).read_bytes()
    try:
        d = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"{path}: not valid JSON ({exc})") from None
    L, info = lattice_from_dict(d)
    return L, info, raw


def write_lattice_file(path, L: Lattice, metadata=None):
    atomic_write(path, json.dumps(lattice_to_dict(L, metadata), indent=2) + "\n")


# --------------------------------------------------------------------------- polyhedra


def family_from_dict(d):
    """``{"n": n, "family": [polyhedron, ...]}`` or a bare list of polyhedra."""
    if isinstance(d, list):
        polys = [Polyhedron.from_dict(p) for p in d]
        if not polys:
            raise PreconditionError("a bare empty list does not fix the dimension")
        return polys[0].n, polys
    if not isinstance(d, dict) or "n" not in d:
        raise PreconditionError("family file needs 'n' and 'family'")
    n = int(d["n"])
    polys = []
    for p in d.get("family", []):
        if "n" not in p:
            p = dict(p, n=n)
        P = Polyhedron.from_dict(p)
        if P.n != n:
            raise PreconditionError("family member in the wrong dimension")
        polys.append(P)
    return n, polys


def family_to_dict(n, polys):
    return {"n": n, "family": [P.to_dict() for P in polys]}


# --------------------------------------------------------------------------- run records


def run_record(command, argv, input_digest, seed, options, payload, timings=None):
    """A RunRecord.  ``payload`` must not contain timings, so replays compare equal."""
    from . import __version__

    return {
        "command": command,
        "argv": list(argv),
        "input_digest": input_digest,
        "seed": seed,
        "options": options,
        "payload": payload,
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "timings": timings or {},
    }


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (tuple, set, frozenset)):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dumps(obj, **kw):
    return json.dumps(obj, default=_json_default, **kw)


# --------------------------------------------------------------------------- Grayson plots


def grayson_svg(profile, width=480, height=360, pad=40):
    """SVG of the Grayson polygon: hull vertices joined, other points as dots."""
    pts = [(k, y) for k, y, _ in profile.csv_rows()]
    verts = [(k, y) for k, y, v in profile.csv_rows() if v]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 1, y1 + 1
    sx = (width - 2 * pad) / max(x1 - x0, 1)
    sy = (height - 2 * pad) / (y1 - y0)

    def px(p):
        return pad + (p[0] - x0) * sx, height - pad - (p[1] - y0) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="#999"/>',
    ]
    line = " ".join(f"{a:.2f},{b:.2f}" for a, b in map(px, verts))
    out.append(f'<polyline points="{line}" fill="none" stroke="#1f4e9c" stroke-width="2"/>')
    for p in pts:
        a, b = px(p)
        fill = "#1f4e9c" if p in verts else "#d1495b"
        out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="4" fill="{fill}"/>')
        out.append(
            f'<text x="{a:.2f}" y="{height - pad + 16}" font-size="11" text-anchor="middle">{p[0]}</text>'
        )
    out.append(
        f'<text x="{pad}" y="{pad - 12}" font-size="12">rank vs minimal log-covolume</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
