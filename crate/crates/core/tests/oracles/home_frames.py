"""Link positions at the neutral pose, by plain 4x4 matrix composition.

Written against the fixture files only (no crate code). Prints one line per link:
<fixture> <link> x y z
"""
import math
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np


def rpy_matrix(r, p, y):
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


def axis_angle(axis, angle):
    k = np.asarray(axis, float)
    k = k / np.linalg.norm(k)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * kx + (1 - math.cos(angle)) * (kx @ kx)


def homogeneous(rot, trans):
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = trans
    return m


def floats(text):
    return [float(v) for v in text.split()]


def home_frames(path):
    robot = ET.parse(path).getroot()
    links = {l.get("name"): l for l in robot.findall("link")}
    joints = robot.findall("joint")
    child_of = {j.find("child").get("link") for j in joints}
    root = next(n for n in links if n not in child_of)
    frames = {root: np.eye(4)}
    pending = list(joints)
    while pending:
        for j in list(pending):
            parent = j.find("parent").get("link")
            if parent not in frames:
                continue
            origin = j.find("origin")
            xyz = floats(origin.get("xyz", "0 0 0")) if origin is not None else [0, 0, 0]
            rpy = floats(origin.get("rpy", "0 0 0")) if origin is not None else [0, 0, 0]
            motion = np.eye(4)
            if j.get("type") != "fixed":
                limit = j.find("limit")
                lo, hi = float(limit.get("lower")), float(limit.get("upper"))
                neutral = j.find("neutral")
                q = float(neutral.get("position")) if neutral is not None else min(max(0.0, lo), hi)
                axis = floats(j.find("axis").get("xyz"))
                if j.get("type") == "prismatic":
                    motion = homogeneous(np.eye(3), np.asarray(axis) / np.linalg.norm(axis) * q)
                else:
                    motion = homogeneous(axis_angle(axis, q), [0, 0, 0])
            frames[j.find("child").get("link")] = (
                frames[parent] @ homogeneous(rpy_matrix(*rpy), xyz) @ motion
            )
            pending.remove(j)
    out = {}
    for name, frame in frames.items():
        tip = links[name].find("tip")
        point = floats(tip.get("xyz")) if tip is not None else [0, 0, 0]
        out[name] = (frame @ np.array([*point, 1.0]))[:3]
    return out


if __name__ == "__main__":
    for path in sys.argv[1:]:
        stem = Path(path).stem
        for name, p in sorted(home_frames(path).items()):
            print(f"{stem} {name} {p[0]:.12f} {p[1]:.12f} {p[2]:.12f}")
