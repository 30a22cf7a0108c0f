"""CLI: cesm-extract --image-dir D --metadata M --backbone densenet121
--out emb.emb1 --labels labels.csv"""

import argparse
import sys

from .extract import BACKBONES, ExtractorConfig, MissingImageError, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cesm-extract", description=__doc__)
    parser.add_argument("--image-dir", required=True)
    parser.add_argument("--metadata", required=True,
                        help="CSV (or Excel, with pandas installed) listing "
                             "image filenames and BIRADS scores")
    parser.add_argument("--backbone", choices=BACKBONES, default="densenet121")
    parser.add_argument("--out", required=True, help="EMB1 output path")
    parser.add_argument("--labels", required=True, help="labels CSV output path")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--no-pretrained", action="store_true",
                        help="random init (for offline smoke runs only)")
    parser.add_argument("--skip-missing", action="store_true")
    parser.add_argument("--image-column", default="Image_name")
    parser.add_argument("--label-column", default="BIRADS")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExtractorConfig(
        image_dir=args.image_dir, metadata_path=args.metadata,
        backbone=args.backbone, output_path=args.out, labels_path=args.labels,
        batch_size=args.batch_size, pretrained=not args.no_pretrained,
        skip_missing=args.skip_missing, image_column=args.image_column,
        label_column=args.label_column)
    try:
        count, dim, skipped = extract(config)
    except (MissingImageError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"extracted {count} embeddings of dim {dim} with {args.backbone}"
          + (f" ({len(skipped)} skipped)" if skipped else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
