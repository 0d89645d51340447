"""Command-line entry point: featurize, evaluate, distance, synth, dump-graph.

Errors print one line ``E<code> <category>: <message>`` to stderr and exit
with that code: 1 usage, 2 data, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .analysis import dumps_bulges
from .classify import run_protocol, save_confusion
from .features import dumps_signature, load_signatures
from .gng import BinaryMask, GngParams, dumps_graph, train_gng
from .ingest import (DEFAULT_DEPTH_BAND, DataError, check_counts, dataset_entries,
                     layout_manifest, load_record, read_array, synthetic_sample)
from .iemd import iemd_matrix, write_distance_csv
from .pipeline import analyze_graph, process_mask

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3
_CATEGORY = {EXIT_USAGE: "usage", EXIT_DATA: "data", EXIT_INTERNAL: "internal"}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    gng: GngParams = field(default_factory=GngParams)
    depth_band: int = DEFAULT_DEPTH_BAND
    knn_k: int = 3
    protocol: str = "l-o-o"
    layout: str = "generic-mask"
    root: str = "."
    out: str = "out"
    seed: int = 0
    jobs: int = 1

    def validate(self) -> None:
        self.gng.validate()
        if self.knn_k < 1:
            raise UsageError("k must be >= 1")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        if self.depth_band < 0:
            raise UsageError("depth_band must be >= 0")

    def dumps(self) -> str:
        items = {f.name: getattr(self.gng, f.name) for f in dataclasses.fields(GngParams) if f.name != "seed"}
        items.update({f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "gng"})
        return "".join(f"{k}={v}\n" for k, v in items.items())

    @classmethod
    def loads(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        pairs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            pairs[k] = v
        return (base or cls()).updated(pairs)

    def updated(self, pairs: dict) -> "RunConfig":
        """Apply string overrides; ``seed`` sets both the run and the GNG seed."""
        gng_fields = {f.name for f in dataclasses.fields(GngParams)} - {"seed"}
        own = {f.name for f in dataclasses.fields(self)} - {"gng"}
        g, top = {}, {}
        for k, v in pairs.items():
            if v is None:
                continue
            if k in own:
                top[k] = _coerce(getattr(self, k), v, k)
                if k == "seed":
                    g["seed"] = top[k]
            elif k in gng_fields:
                g[k] = _coerce(getattr(self.gng, k), v, k)
            else:
                raise UsageError(f"unknown config key {k!r}")
        return dataclasses.replace(self, gng=dataclasses.replace(self.gng, **g), **top)


def _coerce(current, value, key):
    try:
        return type(current)(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad value {value!r} for {key}") from None


def record_seed(base: int, index: int) -> int:
    """Per-record GNG seed, independent of worker scheduling."""
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


# -- commands ------------------------------------------------------------------

def _featurize_one(job):
    path, kind, label, subject, band, params, want_graph = job
    rec = load_record(Path(path), kind, label, subject, band)
    res = process_mask(rec.mask, params, label=label, subject=subject)
    graph = dumps_graph(res.graph) + dumps_bulges(res.bulges) if want_graph else None
    return dumps_signature(res.signature), graph


def _pool_map(fn, jobs, n_jobs):
    if n_jobs <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))


def cmd_featurize(cfg: RunConfig, dump_graphs: bool = False) -> Path:
    entries = dataset_entries(cfg.root, cfg.layout)
    check_counts(entries, cfg.layout)
    kind = layout_manifest()[cfg.layout]["kind"]
    jobs = [(str(p), kind, lab, subj, cfg.depth_band,
             dataclasses.replace(cfg.gng, seed=record_seed(cfg.seed, i)), dump_graphs)
            for i, (p, lab, subj) in enumerate(entries)]
    results = _pool_map(_featurize_one, jobs, cfg.jobs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    sig_path = out / "signatures.txt"
    sig_path.write_text("".join(line + "\n" for line, _ in results))
    if dump_graphs:
        gdir = out / "graphs"
        gdir.mkdir(exist_ok=True)
        for i, (_, graph) in enumerate(results):
            (gdir / f"{i:05d}.gng").write_text(graph)
    return sig_path


def cmd_evaluate(cfg: RunConfig, signature_file: str) -> Path:
    sigs = load_signatures(signature_file)
    cm = run_protocol(sigs, cfg.protocol, seed=cfg.seed, k=cfg.knn_k)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_confusion(cm, out / "confusion.csv")
    (out / "summary.txt").write_text(f"protocol {cfg.protocol}\n" + cm.summary())
    sys.stdout.write(f"protocol {cfg.protocol}\n" + cm.summary())
    return out / "confusion.csv"


def cmd_distance(file_a: str, file_b: str | None, out: str) -> Path:
    a = load_signatures(file_a)
    d = iemd_matrix(a) if file_b is None else iemd_matrix(a, load_signatures(file_b))
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_distance_csv(d, path)
    return path


def cmd_synth(out: str, fingers=range(6), subjects: int = 10, samples: int = 10) -> Path:
    """Write the synthetic finger-count corpus as PNG masks plus index.csv."""
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    rows = ["path,label,subject"]
    for f in fingers:
        for s in range(subjects):
            for i in range(samples):
                mask, _ = synthetic_sample(f, s, i)
                name = f"c{f}_s{s}_{i}.png"
                Image.fromarray(mask.bits.astype(np.uint8) * 255).save(root / name)
                rows.append(f"{name},{f},{s}")
    (root / "index.csv").write_text("\n".join(rows) + "\n")
    return root


def cmd_dump_graph(cfg: RunConfig, mask_file: str, out: str | None) -> str:
    a = read_array(Path(mask_file))
    g = train_gng(BinaryMask(a > 0), cfg.gng)
    text = dumps_graph(g) + dumps_bulges(analyze_graph(g).bulges)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


# -- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--out")

    p = _Parser(prog="gngiemd", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("featurize", parents=[common], help="dataset -> signature file")
    f.add_argument("--layout", choices=sorted(layout_manifest()))
    f.add_argument("--root")
    f.add_argument("--dump-graphs", action="store_true")

    e = sub.add_parser("evaluate", parents=[common], help="signature file -> confusion matrix")
    e.add_argument("signatures")
    e.add_argument("--protocol", help="h-h, l-o-o, l-<p>-o or i2i")
    e.add_argument("--k", type=int, dest="knn_k")

    d = sub.add_parser("distance", parents=[common], help="IEMD matrix between signature files")
    d.add_argument("a")
    d.add_argument("b", nargs="?")

    s = sub.add_parser("synth", parents=[common], help="write the synthetic mask corpus")
    s.add_argument("--subjects", type=int, default=10)
    s.add_argument("--samples", type=int, default=10)

    g = sub.add_parser("dump-graph", parents=[common], help="mask image -> GNG and bulge dump")
    g.add_argument("mask")
    return p


def make_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise UsageError(f"cannot read config: {e}") from None
        cfg = RunConfig.loads(text, cfg)
    flags = {k: getattr(args, k, None) for k in ("seed", "jobs", "out", "layout", "root", "protocol", "knn_k")}
    cfg = cfg.updated(flags)
    try:
        cfg.validate()
    except ValueError as e:
        raise UsageError(str(e)) from None
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = make_config(args)
    if args.command == "featurize":
        print(cmd_featurize(cfg, args.dump_graphs))
    elif args.command == "evaluate":
        cmd_evaluate(cfg, args.signatures)
    elif args.command == "distance":
        print(cmd_distance(args.a, args.b, args.out or "distances.csv"))
    elif args.command == "synth":
        print(cmd_synth(cfg.out, subjects=args.subjects, samples=args.samples))
    elif args.command == "dump-graph":
        cmd_dump_graph(cfg, args.mask, args.out)
    return 0


def main(argv=None) -> int:
    try:
        code = run(argv)
    except UsageError as e:
        code, msg = EXIT_USAGE, str(e)
    except (DataError, ValueError, OSError) as e:
        code, msg = EXIT_DATA, str(e)
    except Exception as e:  # anything else is a broken invariant
        code, msg = EXIT_INTERNAL, f"{type(e).__name__}: {e}"
    else:
        return code
    print(f"E{code} {_CATEGORY[code]}: {' '.join(msg.split())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
