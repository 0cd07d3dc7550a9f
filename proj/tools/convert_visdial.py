#!/usr/bin/env python3
"""Converter stub: real visual-dialog corpus -> fga JSONL.

This repository trains and evaluates on its synthetic generator only; no
corpus data is shipped or downloaded. This stub documents the mapping a real
converter would implement so the expected schema lives next to the code.

Target schema (one JSON object per line):

    {
      "record_id": "<image-id>_<round>",
      "image":     {"sidecar": "features.bin"},          # or inline base64 f32
      "caption":   ["a", "man", "riding", ...],          # tokens, lowercased
      "question":  ["what", "color", ...],
      "history":   [{"question": [...], "answer": [...]}, ...],  # rounds < t
      "candidates": [[...], ...],                        # 100 token lists
      "gt_index":  37,
      "dense_relevance": [0.0, ...]                      # optional, 100 floats
    }

Feature sidecar (shared across records of the same split):

    magic "FGAF", u32 count, u32 rows (regions), u32 cols (feature dim),
    index entries {u32 id_len, id bytes, u64 offset}, then f32 blocks
    (little-endian, row-major rows x cols) at the recorded offsets.

A real converter would additionally:
  * build a vocabulary JSON ("<pad>" = 0, "<unk>" present) from the training
    split and map out-of-vocabulary tokens to "<unk>" at load time;
  * extract or import per-image region features (e.g. 36-49 regions x 512+
    dims) into the sidecar;
  * carry the dense relevance annotations into "dense_relevance" where the
    corpus provides them.
"""

import sys

if __name__ == "__main__":
    sys.exit(
        "convert_visdial.py is a documented stub: see the module docstring "
        "for the JSONL/sidecar schema. No corpus conversion is implemented."
    )
