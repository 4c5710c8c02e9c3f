"""Run manifests: enough provenance to reproduce any command bit-exactly.

A manifest is written next to every command's outputs.  Outputs themselves
never embed wall-clock state, so re-running the recorded argv reproduces
them byte for byte; the manifest's own timestamps are metadata, not output.
"""

import json
import os
from datetime import datetime, timezone

from . import __version__


def _now():
    return datetime.now(tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class RunManifest:
    def __init__(self, command, argv, seed=None, inputs=None):
        self.data = {
            "tool": "strandsim",
            "version": __version__,
            "command": command,
            "argv": list(argv),
            "seed": seed,
            "inputs": sorted(inputs or []),
            "outputs": [],
            "started_utc": _now(),
            "finished_utc": None,
        }

    def add_output(self, path):
        self.data["outputs"].append(os.path.abspath(path))

    def write(self, out_dir):
        self.data["finished_utc"] = _now()
        self.data["outputs"] = sorted(self.data["outputs"])
        path = os.path.join(out_dir, f"{self.data['command']}_manifest.json")
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def load_manifest(path):
    with open(path) as fh:
        return json.load(fh)


def replay_argv(manifest, out_dir=None):
    """Reconstruct the argv of a recorded run, optionally redirecting output."""
    argv = list(manifest["argv"])
    if out_dir is not None:
        if "--out-dir" in argv:
            i = argv.index("--out-dir")
            argv[i + 1] = str(out_dir)
        else:
            argv += ["--out-dir", str(out_dir)]
    return argv
