import argparse
import json
import logging
import sys
from typing import NoReturn

from vorticity_lab import lab as labmod
from vorticity_lab.config import KEYS, Command, parse_config
from vorticity_lab.errors import ConfigError, LabError
from vorticity_lab.output import write_json

EX_USAGE = 64
EX_DATAERR = 65
EX_SOFTWARE = 70


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EX_USAGE)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="vorticity-lab",
        description="2D vorticity-stream function laboratory: forward runs, boundary vorticity "
        "recovery and numerical checks of the a priori estimates.",
    )
    parser.add_argument("command", choices=[command.value for command in Command])
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="set any config key"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    for spec in KEYS:
        if spec.name == "command":
            continue
        parser.add_argument(
            f"--{spec.name.replace('_', '-')}",
            dest=spec.name,
            default=argparse.SUPPRESS,
            help=f"{spec.help} (default: {spec.default})",
        )
    return parser


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = vars(parser.parse_args(argv))

    logging.basicConfig(
        level=max(logging.DEBUG, logging.WARNING - 10 * args.pop("verbose")),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    source = args.pop("config")
    flags = {}
    for item in args.pop("set"):
        key, sep, value = item.partition("=")
        if not sep:
            parser.error(f"--set expects KEY=VALUE, got '{item}'")
        flags[key.strip()] = value.strip()
    flags.update(args)

    try:
        config = parse_config(source, flags)
    except ConfigError as error:
        for issue in error.issues:
            print(issue, file=sys.stderr)
        print(json.dumps(error.to_json(), sort_keys=True), file=sys.stderr)
        sys.exit(EX_DATAERR)

    try:
        labmod.run(config)
    except LabError as error:
        document = error.to_json()
        write_json(config.out / "error.json", document, config.hash)
        print(json.dumps(document, sort_keys=True), file=sys.stderr)
        sys.exit(EX_SOFTWARE)


if __name__ == "__main__":
    main()
