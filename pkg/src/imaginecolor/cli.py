"""Command line entry point: imagine, colorize, train, evaluate, serve."""
from __future__ import annotations

import argparse
import logging
import os
import shlex
import sys


from . import colorspace
from .backends import (
    DirectoryGenerator,
    DirectorySegmenter,
    SubprocessGenerator,
    SubprocessSegmenter,
    ToyGenerator,
    ToySegmenter,
)
from .composition import assemble_reference, assign_segments
from .imagination import DEFAULT_N_REFERENCES

logger = logging.getLogger("imaginecolor")


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def _backends(args, stem):
    if args.backend == "toy":
        return ToySegmenter(), ToyGenerator()
    if args.backend == "dir":
        if not args.backend_root:
            raise SystemExit("--backend dir needs --backend-root")
        return DirectorySegmenter(args.backend_root, stem), DirectoryGenerator(args.backend_root, stem)
    if not (args.segmenter_cmd and args.generator_cmd):
        raise SystemExit("--backend cmd needs --segmenter-cmd and --generator-cmd")
    return (SubprocessSegmenter(shlex.split(args.segmenter_cmd), mode=args.mode),
            SubprocessGenerator(shlex.split(args.generator_cmd)))


def _add_imagination_args(p):
    p.add_argument("-n", type=int, default=DEFAULT_N_REFERENCES, help="number of references")
    p.add_argument("--seeds", type=int, nargs="+", help="one latent seed per reference")
    p.add_argument("--backend", choices=("toy", "dir", "cmd"), default="toy")
    p.add_argument("--backend-root", help="root of seg/ and refs/ for --backend dir")
    p.add_argument("--segmenter-cmd", help="segmenter command for --backend cmd")
    p.add_argument("--generator-cmd", help="generator command for --backend cmd")
    p.add_argument("--mode", choices=("gray", "rgb"), default="gray", help="image mode sent to a cmd segmenter")


def _seeds(args):
    if args.seeds:
        return args.seeds
    return list(range(args.n))


def cmd_imagine(args):
    from .pipeline import imagine

    image = colorspace.read_image(args.image)
    stem = _stem(args.image)
    seg_backend, gen_backend = _backends(args, stem)
    L, refs = imagine(image, seeds=_seeds(args), segmenter=seg_backend, generator=gen_backend)
    out = args.out
    with open(os.path.join(_mkdir(out, "seg"), f"{stem}.png"), "wb") as fh:
        fh.write(colorspace.encode_label_png(refs.segmentation.labels))
    ref_dir = _mkdir(out, "refs", stem)
    for i, ref in enumerate(refs.references):
        colorspace.write_png(os.path.join(ref_dir, f"ref_{i}.png"), ref)
    assignment = assign_segments(L / 100.0, refs)
    composed = assemble_reference(assignment, refs, gray_lum=L / 100.0)
    colorspace.write_png(os.path.join(_mkdir(out, "composed"), f"{stem}.png"), composed.image)
    with open(os.path.join(_mkdir(out, "assignment"), f"{stem}.json"), "w") as fh:
        fh.write(assignment.to_json())
    for failure in refs.failed:
        logger.warning("reference %(index)d (seed %(seed)d) failed: %(error)s", failure)
    print(f"{len(refs)} references, {len(refs.segmentation.segment_ids)} segments -> {out}")


def _mkdir(*parts):
    path = os.path.join(*parts)
    os.makedirs(path, exist_ok=True)
    return path


def cmd_colorize(args):
    from .colorizer import colorize, load_checkpoint
    from .pipeline import run_pipeline

    model = load_checkpoint(args.checkpoint)
    image = colorspace.read_image(args.image)
    if args.ref:
        result = colorize(image, colorspace.read_image(args.ref), model)
    else:
        seg_backend, gen_backend = _backends(args, _stem(args.image))
        seeds = _seeds(args)
        result = run_pipeline(image, len(seeds), seeds, seg_backend, gen_backend, model).result
    out = args.output or f"{_stem(args.image)}_color.png"
    colorspace.write_png(out, result)
    print(out)


def _load_corpus(folder):
    names = sorted(n for n in os.listdir(folder) if n.lower().endswith((".png", ".jpg", ".jpeg")))
    return [colorspace.read_image(os.path.join(folder, n)) for n in names]


def cmd_train(args):
    from .colorizer import save_checkpoint
    from .training import TrainConfig, train

    overrides = {k: getattr(args, k) for k in ("iterations", "seed", "crop_size", "batch_size", "learning_rate",
                                               "base_width", "checkpoint_dir", "log_path")}
    cfg = TrainConfig.from_file(args.config, **overrides) if args.config else TrainConfig.from_mapping(
        {k: v for k, v in overrides.items() if v is not None})
    images = _load_corpus(args.data)
    model, log = train(images, cfg)
    save_checkpoint(model, args.output)
    if log:
        print(f"trained {len(log)} steps, loss {log[0]['loss']:.5f} -> {log[-1]['loss']:.5f}; saved {args.output}")
    else:
        print(f"no training steps; saved {args.output}")


def cmd_evaluate(args):
    from .metrics import evaluate_directory, format_table, report_json

    report = evaluate_directory(args.dirs, args.report)
    if args.report is None:
        sys.stdout.write(report_json(report))
    print(format_table(report))


def cmd_serve(args):
    import uvicorn

    from .colorizer import load_checkpoint
    from .service import SessionStore, create_app

    store = SessionStore(args.state_dir, load_checkpoint(args.checkpoint))
    uvicorn.run(create_app(store), host=args.host, port=args.port)


def build_parser():
    parser = argparse.ArgumentParser(prog="imaginecolor", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("imagine", help="sample and compose references for an image")
    p.add_argument("image")
    _add_imagination_args(p)
    p.add_argument("--out", default="imagination", help="output root (seg/, refs/, composed/, assignment/)")
    p.set_defaults(func=cmd_imagine)

    p = sub.add_parser("colorize", help="colorize an image")
    p.add_argument("image")
    p.add_argument("--ref", help="reference PNG; if absent, references are imagined")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("-o", "--output")
    _add_imagination_args(p)
    p.set_defaults(func=cmd_colorize)

    p = sub.add_parser("train", help="train the colorization network")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--data", required=True, help="folder of color training images")
    p.add_argument("-o", "--output", default="colorizer.ckpt")
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--crop-size", dest="crop_size", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--base-width", dest="base_width", type=int)
    p.add_argument("--checkpoint-dir", dest="checkpoint_dir")
    p.add_argument("--log-path", dest="log_path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="colorfulness report for result directories")
    p.add_argument("dirs", nargs="+")
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the interactive composition API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state-dir", required=True)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
