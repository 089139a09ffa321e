#!/usr/bin/env python3
"""Regenerates the synthetic fixtures under tests/fixtures.

Scenes are flat-colour shapes drawn with Pillow; masks are written as
polygons, uncompressed RLE and compressed RLE strings.
"""
import json
import pathlib

import numpy as np
from PIL import Image, ImageDraw

HERE = pathlib.Path(__file__).resolve().parent


def rle_counts(mask):
    flat = mask.astype(np.uint8).flatten(order="F")
    counts, cur, run = [], 0, 0
    for v in flat:
        if v != cur:
            counts.append(run)
            cur, run = v, 0
        run += 1
    counts.append(run)
    return counts


def rle_string(counts):
    out = []
    for i, c in enumerate(counts):
        x = c - counts[i - 2] if i > 2 else c
        more = True
        while more:
            ch = x & 0x1F
            x >>= 5
            more = (x != -1) if (ch & 0x10) else (x != 0)
            if more:
                ch |= 0x20
            out.append(chr(ch + 48))
    return "".join(out)


def bbox_of(mask):
    ys, xs = np.nonzero(mask)
    return [int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1)]


class Scene:
    def __init__(self, w, h, bg):
        self.w, self.h = w, h
        self.img = Image.new("RGB", (w, h), bg)
        self.draw = ImageDraw.Draw(self.img)
        self.objects = []

    def polygon(self, cat, pts, colour):
        self.draw.polygon(pts, fill=colour)
        m = Image.new("1", (self.w, self.h), 0)
        ImageDraw.Draw(m).polygon(pts, fill=1)
        mask = np.array(m, dtype=bool)
        flat = [float(c) for p in pts for c in p]
        self.objects.append((cat, {"kind": "polygon", "points": flat}, mask))

    def ellipse(self, cat, box, colour, compressed=False):
        self.draw.ellipse(box, fill=colour)
        m = Image.new("1", (self.w, self.h), 0)
        ImageDraw.Draw(m).ellipse(box, fill=1)
        mask = np.array(m, dtype=bool)
        self.objects.append((cat, {"kind": "rle", "compressed": compressed}, mask))


def coco(scenes, names, categories, out_dir, start_ann=1):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "images").mkdir(exist_ok=True)
    cat_ids = {c: i + 1 for i, c in enumerate(categories)}
    doc = {"images": [], "categories": [{"id": i, "name": c} for c, i in cat_ids.items()], "annotations": []}
    ann_id = start_ann
    for img_id, (scene, name) in enumerate(zip(scenes, names), start=1):
        path = out_dir / "images" / name
        if name.endswith(".jpg"):
            scene.img.save(path, quality=95)
        else:
            scene.img.save(path)
        doc["images"].append({"id": img_id, "width": scene.w, "height": scene.h, "file_name": name})
        for cat, seg, mask in scene.objects:
            if seg["kind"] == "polygon":
                segmentation = [seg["points"]]
                # the rasterizer samples pixel centres; the area stored is Pillow's
            else:
                counts = rle_counts(mask)
                segmentation = {"size": [scene.h, scene.w],
                                "counts": rle_string(counts) if seg["compressed"] else counts}
            doc["annotations"].append({
                "id": ann_id, "image_id": img_id, "category_id": cat_ids[cat],
                "segmentation": segmentation, "bbox": bbox_of(mask), "area": int(mask.sum()), "iscrowd": 0,
            })
            ann_id += 1
    (out_dir / "annotations.json").write_text(json.dumps(doc, indent=1) + "\n")


def make_coco2():
    a = Scene(96, 72, (135, 190, 235))
    a.polygon("table", [(8, 44), (60, 44), (60, 68), (8, 68)], (150, 100, 60))
    a.ellipse("ball", (64, 10, 90, 36), (220, 40, 40))
    a.polygon("tree", [(20, 4), (40, 38), (2, 38)], (40, 150, 60))
    b = Scene(80, 80, (230, 230, 210))
    b.polygon("box", [(10, 10), (42, 10), (42, 42), (10, 42)], (200, 160, 40))
    b.ellipse("ball", (30, 30, 60, 60), (30, 90, 200), compressed=True)
    b.polygon("table", [(0, 64), (79, 64), (79, 79), (0, 79)], (120, 80, 50))
    coco([a, b], ["room_a.png", "room_b.jpg"], ["table", "ball", "tree", "box"], HERE / "coco2")


def make_coco3():
    a = Scene(120, 160, (240, 240, 240))
    a.polygon("person", [(30, 4), (90, 4), (90, 48), (30, 48)], (200, 120, 90))
    a.ellipse("cat", (30, 56, 90, 100), (90, 90, 90))
    a.polygon("dog", [(20, 110), (100, 110), (100, 155), (20, 155)], (150, 110, 70))
    b = Scene(64, 64, (120, 200, 240))
    b.ellipse("bird", (12, 16, 52, 48), (240, 200, 30), compressed=True)
    c = Scene(100, 60, (90, 90, 90))
    c.polygon("car", [(10, 20), (90, 20), (90, 52), (10, 52)], (200, 20, 20))
    coco([a, b, c], ["scene_001.png", "scene_002.png", "scene_003.png"],
         ["person", "cat", "dog", "bird", "car"], HERE / "coco3")


def make_icl_scenes():
    a = Scene(128, 96, (170, 210, 240))
    a.polygon("sky", [(0, 0), (127, 0), (127, 30), (0, 30)], (120, 180, 240))
    a.polygon("water", [(0, 62), (127, 62), (127, 95), (0, 95)], (30, 90, 170))
    a.ellipse("umbrella", (70, 20, 110, 50), (240, 120, 170))
    a.polygon("person", [(82, 40), (98, 40), (98, 88), (82, 88)], (200, 140, 110))
    b = Scene(128, 96, (250, 250, 245))
    b.polygon("vase", [(50, 40), (78, 40), (72, 90), (56, 90)], (235, 235, 235))
    b.ellipse("flowers", (40, 8, 88, 44), (250, 250, 255))
    b.polygon("lawn", [(0, 70), (40, 70), (40, 95), (0, 95)], (60, 160, 60))
    coco([a, b], ["icl_1.png", "icl_2.png"],
         ["sky", "water", "umbrella", "person", "vase", "flowers", "lawn"], HERE / "icl_scenes")


def make_mix():
    out = HERE / "mix"
    out.mkdir(exist_ok=True)

    def records(prefix, n, answer):
        rows = []
        for i in range(n):
            rows.append({"id": f"{prefix}-{i:04d}", "image": f"{prefix}/{i:04d}.jpg", "conversations": [
                {"from": "human", "value": f"<image>\nWhat is shown in picture {i}?"},
                {"from": "gpt", "value": answer(i)}]})
        return rows

    sets = {
        "llava_it.jsonl": records("llava", 665, lambda i: f"A photo with {i % 7 + 1} objects on a table."),
        "listing.jsonl": records("listing", 10, lambda i: f"1. cup, 2. plate, 3. fork number {i}."),
        "qa.jsonl": records("qa", 20, lambda i: f"The object under tag {i % 3 + 1} is a chair."),
    }
    for name, rows in sets.items():
        (out / name).write_text("".join(json.dumps(r) + "\n" for r in rows))
    recipe = {"seed": 695, "format": "jsonl", "sources": [
        {"label": "llava_it", "path": "llava_it.jsonl", "take": 665},
        {"label": "listing", "path": "listing.jsonl", "take": 10},
        {"label": "qa", "path": "qa.jsonl", "take": 20}]}
    (out / "recipe.json").write_text(json.dumps(recipe, indent=2) + "\n")


def make_probe():
    rows = []
    listing_at = {3, 17, 29, 44, 58, 71, 96}
    for i in range(100):
        if i in listing_at:
            text = f"There are a few things to check:\n1. the lid number {i}\n2. the cable\n3. the switch"
        elif i % 10 == 5:
            text = f"Version {i}.0 was released in 1999."
        else:
            text = f"A short caption about scene {i}, with nothing enumerated."
        rows.append({"id": f"p{i:03d}", "image": f"{i:03d}.jpg", "conversations": [
            {"from": "human", "value": "<image>\nDescribe the image."},
            {"from": "gpt", "value": text}]})
    (HERE / "probe_corpus.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))


if __name__ == "__main__":
    make_coco2()
    make_coco3()
    make_icl_scenes()
    make_mix()
    make_probe()
