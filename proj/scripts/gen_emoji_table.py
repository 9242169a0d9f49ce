#!/usr/bin/env python3
"""Regenerate data/emoji_aliases.tsv from the `emoji` package.

Keys are space-separated uppercase hex code points with U+FE0F removed;
aliases are lowercased and restricted to [a-z0-9_].
"""
import re
import sys

import emoji

TABLE_VERSION = 1


def sanitize(alias: str) -> str:
    body = alias.strip(":").lower()
    body = re.sub(r"[^a-z0-9_]+", "_", body)
    body = re.sub(r"_+", "_", body).strip("_")
    return f":{body}:"


def main(out_path: str) -> None:
    rows = {}
    # fully-qualified entries first so they win on FE0F-stripped collisions
    entries = sorted(emoji.EMOJI_DATA.items(),
                     key=lambda kv: (kv[1].get("status", 99), kv[0]))
    for seq, data in entries:
        key = " ".join(f"{ord(c):X}" for c in seq if ord(c) != 0xFE0F)
        if not key or key in rows:
            continue
        rows[key] = sanitize(data["en"])
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# emoji-alias-table v{TABLE_VERSION} (emoji {emoji.__version__})\n")
        for key in sorted(rows, key=lambda k: [int(x, 16) for x in k.split()]):
            fh.write(f"{key}\t{rows[key]}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/emoji_aliases.tsv")
