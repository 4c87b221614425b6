"""Run manifests: enough provenance to re-run any command byte-identically.

Every artifact-producing command writes `<output>.manifest.json` recording
the resolved argv, input digests, tool version, seeds, and a timestamp.
Re-dispatching the recorded argv reproduces the output bytes; only the
manifest's own timestamp differs between runs.
"""

import datetime
import hashlib
import json

TOOL_VERSION = "0.1.0"


def file_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(output_path, command: str, argv: list[str], args: dict,
                   input_paths: list, seeds: dict | None = None) -> str:
    manifest = {
        "tool": "claimcheck",
        "version": TOOL_VERSION,
        "command": command,
        "argv": list(argv),
        "resolved_args": {key: value for key, value in sorted(args.items())},
        "inputs": {str(path): file_digest(path) for path in sorted(set(map(str, input_paths)))},
        "seeds": seeds or {},
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    manifest_path = str(output_path) + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest_path


def read_manifest(path) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)
