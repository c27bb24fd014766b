"""JSON-over-HTTP adapters for remote grounding stages.

Every request is a POST of a JSON object::

    {"version": 1, "stage": "describe" | "ground" | "segment",
     "image": {"format": "pgm16", "width": W, "height": H, "data": <base64>},
     "prompt": <text>,            # describe and ground
     "box": [x0, y0, x1, y1]}     # segment

``image.data`` is a binary 16-bit PGM of the part-ID image (the colour
surrogate) unless the ImageRef carries its own ``raster``.  Replies:

    describe: {"version": 1, "text": <string>}
    ground:   {"version": 1, "boxes": [{"box": [x0, y0, x1, y1], "score": s}, ...]}
    segment:  {"version": 1, "mask": {"width": W, "height": H, "data": <base64>}}

Several candidate boxes are reduced to the highest score (first wins ties).
Mask data is ``numpy.packbits`` of the row-major boolean raster.
"""

from __future__ import annotations

import base64
import json
import urllib.error
import urllib.request

import numpy as np

from .types import BBox, GroundingError, ImageRef, Mask, limit_sentences

PROTOCOL_VERSION = 1

DESCRIBE_PROMPT = (
    "Task: {task}. Describe the functional part the robot must manipulate in at most three "
    "sentences. Ignore the robot arm. Say which parts are fixed and which part moves."
)


def encode_image(image: ImageRef) -> dict:
    h, w = image.part_ids.shape
    if image.raster is not None:
        data = image.raster
    else:
        data = f"P5\n{w} {h}\n65535\n".encode("ascii") + image.part_ids.astype(">u2").tobytes()
    return {"format": "pgm16", "width": w, "height": h, "data": base64.b64encode(data).decode("ascii")}


def encode_mask(mask: Mask) -> dict:
    h, w = mask.shape
    return {"width": w, "height": h, "data": base64.b64encode(np.packbits(mask.data.ravel()).tobytes()).decode("ascii")}


def decode_mask(obj: dict) -> Mask:
    w, h = int(obj["width"]), int(obj["height"])
    bits = np.unpackbits(np.frombuffer(base64.b64decode(obj["data"]), dtype=np.uint8))
    if len(bits) < w * h:
        raise ValueError("mask payload too short")
    return Mask(bits[: w * h].reshape(h, w).astype(bool))


class RemoteClient:
    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2):
        self.endpoint = endpoint
        self.timeout = float(timeout)
        self.retries = int(retries)
        self.attempts = 0  # total HTTP attempts, for diagnostics

    def request(self, stage: str, body: dict) -> dict:
        payload = json.dumps({"version": PROTOCOL_VERSION, "stage": stage, **body}).encode("utf-8")
        last = None
        for _ in range(self.retries + 1):
            self.attempts += 1
            req = urllib.request.Request(
                self.endpoint, data=payload, headers={"Content-Type": "application/json"}, method="POST"
            )
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    reply = json.loads(resp.read().decode("utf-8"))
            except (urllib.error.URLError, OSError, ValueError) as exc:
                last = exc
                continue
            if not isinstance(reply, dict):
                last = ValueError("reply is not a JSON object")
                continue
            return reply
        raise GroundingError(stage, f"remote request failed after {self.retries + 1} attempts: {last}")

    def describer(self):
        def describe(image: ImageRef, task: str) -> str:
            reply = self.request("describe", {"image": encode_image(image), "prompt": DESCRIBE_PROMPT.format(task=task)})
            text = reply.get("text")
            if not isinstance(text, str) or not text.strip():
                raise GroundingError("describe", "reply carries no text")
            return limit_sentences(text)

        return describe

    def grounder(self):
        def ground(image: ImageRef, description: str) -> BBox:
            if not description.strip():
                raise GroundingError("ground", "empty description")
            reply = self.request("ground", {"image": encode_image(image), "prompt": description})
            boxes = reply.get("boxes") or []
            if not boxes:
                raise GroundingError("ground", "part not visible")
            try:
                best = max(enumerate(boxes), key=lambda ib: (float(ib[1].get("score", 0.0)), -ib[0]))[1]
                box = BBox(*[int(v) for v in best["box"]])
                box.check_fits(image.width, image.height)
            except (KeyError, TypeError, ValueError) as exc:
                raise GroundingError("ground", f"malformed box reply: {exc}") from None
            return box

        return ground

    def segmenter(self):
        def segment(image: ImageRef, box: BBox) -> Mask:
            reply = self.request("segment", {"image": encode_image(image), "box": list(box.as_tuple())})
            try:
                mask = decode_mask(reply["mask"])
            except (KeyError, TypeError, ValueError) as exc:
                raise GroundingError("segment", f"malformed mask reply: {exc}") from None
            if mask.shape != image.part_ids.shape:
                raise GroundingError("segment", "mask size differs from the image")
            if not mask.data.any():
                raise GroundingError("segment", "empty mask")
            return mask

        return segment
