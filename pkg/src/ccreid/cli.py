"""Command-line interface.

Every command is a thin client of the experiment service: it builds a
request, posts it to the service API and prints the response.  With no
``--server`` the app runs in-process over an ASGI transport, so no server
needs to be started; pointing ``--server`` at a running ``ccreid serve``
instance executes the same commands remotely.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the documented code is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment INI file")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config value (repeatable)")


def build_parser() -> _Parser:
    parser = _Parser(prog="ccreid",
                     description="Cross-camera adaptation pipeline for vehicle reID")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    parser.add_argument("--json", action="store_true", dest="as_json",
                        help="print raw JSON responses")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toygen", help="generate the synthetic multi-camera toy dataset")
    p.add_argument("--out", required=True, dest="out_dir")
    p.add_argument("--ids", type=int, default=32, dest="n_identities")
    p.add_argument("--cameras", type=int, default=4, dest="n_cameras")
    p.add_argument("--per", type=int, default=2, dest="images_per_id_per_camera",
                   help="images per identity per camera")
    p.add_argument("--size", type=int, default=64, dest="image_size")
    p.add_argument("--seed", type=int, default=7)

    p = sub.add_parser("train-transfer", help="train the camera-transfer network")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, dest="out_dir")
    _add_config_flags(p)

    p = sub.add_parser("translate", help="map training images into one camera domain")
    p.add_argument("--checkpoint")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, dest="out_dir")
    p.add_argument("--target-camera", type=int, default=-1, dest="target_camera")
    p.add_argument("--passthrough", action="store_true",
                   help="copy images unchanged instead of translating")
    _add_config_flags(p)

    p = sub.add_parser("train-reid", help="train the feature network")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, dest="out_dir")
    p.add_argument("--image-size", type=int, default=None, dest="image_size")
    _add_config_flags(p)

    p = sub.add_parser("extract", help="extract fused descriptors")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test",
                   choices=["train", "query", "gallery", "test", "all"])
    _add_config_flags(p)

    p = sub.add_parser("evaluate", help="score a descriptor store (CMC / mAP)")
    p.add_argument("--descriptors", required=True)
    p.add_argument("--out", default=None)
    _add_config_flags(p)

    p = sub.add_parser("pipeline", help="run all stages end to end")
    p.add_argument("--run-dir", required=True, dest="run_dir")
    _add_config_flags(p)

    p = sub.add_parser("report", help="tabulate and plot one or more reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True, dest="out_dir")
    p.add_argument("--label", action="append", default=None, dest="labels")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


_PAYLOAD_KEYS = {
    "toygen": ["out_dir", "n_identities", "n_cameras", "images_per_id_per_camera",
               "image_size", "seed"],
    "train-transfer": ["manifest", "out_dir", "config", "set"],
    "translate": ["checkpoint", "manifest", "out_dir", "target_camera",
                  "passthrough", "config", "set"],
    "train-reid": ["manifest", "out_dir", "image_size", "config", "set"],
    "extract": ["checkpoint", "manifest", "out", "split", "config", "set"],
    "evaluate": ["descriptors", "out", "config", "set"],
    "pipeline": ["run_dir", "config", "set"],
    "report": ["reports", "out_dir", "labels"],
}

_SUMMARY_LINES = {
    "toygen": "wrote {n_images} images ({n_identities} identities, "
              "{n_cameras} cameras)\nmanifest: {manifest}",
    "train-transfer": "checkpoint: {checkpoint}\nloss log:   {log}",
    "translate": "common camera: {target_camera}\nmanifest: {manifest} "
                 "({n_records} records)",
    "train-reid": "checkpoint: {checkpoint} ({n_identities} identities)\n"
                  "loss log:   {log}",
    "extract": "store: {store} ({count} descriptors of length {dim})",
    "pipeline": "run dir: {run_dir}\nmAP {map:.4f}  rank1 {rank1:.4f}\n{table}",
    "report": "{table}table: {table_path}\nplot:  {plot_path}",
}


def make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from ccreid.service.app import create_app

    return httpx.Client(transport=httpx.ASGITransport(app=create_app()),
                        base_url="http://ccreid.local", timeout=None)


def _print_response(command: str, payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, indent=2))
        return
    template = _SUMMARY_LINES.get(command)
    if template:
        print(template.format(**payload))
    else:
        print(json.dumps(payload, indent=2))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run("ccreid.service.app:app", host=args.host, port=args.port)
        return 0

    payload = {k: getattr(args, k) for k in _PAYLOAD_KEYS[args.command]}
    with make_client(args.server) as client:
        try:
            response = client.post(f"/{args.command}", json=payload)
        except httpx.HTTPError as exc:
            print(f"error: cannot reach service: {exc}", file=sys.stderr)
            return 3
    if response.status_code == 422:
        detail = response.json().get("detail")
        print(f"validation error: {detail}", file=sys.stderr)
        return 2
    if response.status_code != 200:
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        return 3
    body = response.json()
    if args.command == "evaluate" and not args.as_json:
        print(f"mAP    {body['map']:.4f}")
        print(f"rank1  {body['rank1']:.4f}")
        print(f"rank5  {body['rank5']:.4f}")
        print(f"queries {body['n_queries']}  gallery {body['n_gallery']}")
        if body.get("report"):
            print(f"report: {body['report']}")
    else:
        _print_response(args.command, body, args.as_json)
    return 0


if __name__ == "__main__":
    sys.exit(main())
