#!/usr/bin/env python3
"""Export the VGG16 trunk (conv1_1 .. conv2_2) to an MGT1 tensor blob.

The output file plugs into training via

    phi_kind = vgg_file
    phi_path = /path/to/vgg16_trunk.mgt

By default the weights come from torchvision (downloads on first use);
--weights reads a local VGG16 state dict instead, and --random writes
correctly shaped random tensors so the loading path can be exercised on
machines without torch.
"""

import argparse
import struct
import sys

LAYERS = [
    ("conv1_1", 0, 3, 64),
    ("conv1_2", 2, 64, 64),
    ("conv2_1", 5, 64, 128),
    ("conv2_2", 7, 128, 128),
]
IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]


def write_blob(path, tensors):
    out = bytearray(b"MGT1")
    out += struct.pack("<I", len(tensors))
    for name, shape, data in tensors:
        encoded = name.encode()
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += bytes([0, len(shape)])
        for d in shape:
            out += struct.pack("<I", d)
        out += data
    with open(path, "wb") as f:
        f.write(bytes(out))


def f32(values):
    return struct.pack(f"<{len(values)}f", *values)


def random_tensors():
    import random

    rng = random.Random(0)
    tensors = []
    for name, _, in_ch, out_ch in LAYERS:
        fan_in = in_ch * 9
        w = [rng.gauss(0.0, (2.0 / fan_in) ** 0.5) for _ in range(out_ch * in_ch * 9)]
        tensors.append((f"phi/{name}/weight", [out_ch, in_ch, 3, 3], f32(w)))
        tensors.append((f"phi/{name}/bias", [out_ch], f32([0.0] * out_ch)))
    return tensors


def torch_tensors(weights_path):
    import torch

    if weights_path:
        state = torch.load(weights_path, map_location="cpu", weights_only=True)
        if not any(k.startswith("features.") for k in state):
            sys.exit(f"{weights_path}: not a VGG16 state dict (no features.* keys)")
    else:
        from torchvision.models import VGG16_Weights, vgg16

        state = vgg16(weights=VGG16_Weights.IMAGENET1K_V1).state_dict()

    tensors = []
    for name, idx, in_ch, out_ch in LAYERS:
        w = state[f"features.{idx}.weight"].float().contiguous()
        b = state[f"features.{idx}.bias"].float().contiguous()
        if list(w.shape) != [out_ch, in_ch, 3, 3]:
            sys.exit(f"features.{idx}.weight has shape {list(w.shape)}, "
                     f"expected {[out_ch, in_ch, 3, 3]}")
        tensors.append((f"phi/{name}/weight", list(w.shape), w.numpy().tobytes()))
        tensors.append((f"phi/{name}/bias", list(b.shape), b.numpy().tobytes()))
    return tensors


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("output", help="destination .mgt file")
    ap.add_argument("--weights", help="local VGG16 state dict (.pth) instead of downloading")
    ap.add_argument("--random", action="store_true",
                    help="write seeded random tensors instead of real weights")
    args = ap.parse_args()

    tensors = random_tensors() if args.random else torch_tensors(args.weights)
    tensors.append(("phi/mean", [3], f32(IMAGENET_MEAN)))
    tensors.append(("phi/std", [3], f32(IMAGENET_STD)))
    write_blob(args.output, tensors)
    print(f"wrote {len(tensors)} tensors to {args.output}")


if __name__ == "__main__":
    main()
