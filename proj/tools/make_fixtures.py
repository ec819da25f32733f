#!/usr/bin/env python3
"""Writes the fixture scenes, obstacle meshes and scenario configs under data/.

The fixtures are original, hand-laid-out rooms; they are not SceneBench assets.
Run from anywhere: paths resolve relative to the repository root.
"""
import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


class Mesh:
    def __init__(self):
        self.vertices = []
        self.objects = []  # (tag, [triangles])

    def add(self, tag, vertices, triangles):
        # Object tags must be unique within a file.
        used = {t for t, _ in self.objects}
        if tag in used:
            k = 2
            while "%s_%d" % (tag, k) in used:
                k += 1
            tag = "%s_%d" % (tag, k)
        base = len(self.vertices)
        self.vertices.extend(vertices)
        self.objects.append((tag, [(a + base, b + base, c + base) for a, b, c in triangles]))

    def box(self, tag, lo, hi):
        (x0, y0, z0), (x1, y1, z1) = lo, hi
        v = [(x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
             (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1)]
        t = [(0, 2, 1), (0, 3, 2), (4, 5, 6), (4, 6, 7), (0, 1, 5), (0, 5, 4),
             (1, 2, 6), (1, 6, 5), (2, 3, 7), (2, 7, 6), (3, 0, 4), (3, 4, 7)]
        self.add(tag, v, t)

    def prism(self, tag, center, radius, z0, z1, sides=12):
        cx, cy = center
        v = [(cx + radius * math.cos(2 * math.pi * k / sides), cy + radius * math.sin(2 * math.pi * k / sides), z)
             for z in (z0, z1) for k in range(sides)]
        v += [(cx, cy, z0), (cx, cy, z1)]
        bottom, top = 2 * sides, 2 * sides + 1
        t = []
        for k in range(sides):
            n = (k + 1) % sides
            t += [(bottom, n, k), (top, sides + k, sides + n), (k, n, sides + n), (k, sides + n, sides + k)]
        self.add(tag, v, t)

    def log(self, tag, length, radius, sides=12):
        # Cylinder lying along y, resting on z = 0.
        v = [(radius * math.cos(2 * math.pi * k / sides), y, radius + radius * math.sin(2 * math.pi * k / sides))
             for y in (-length / 2, length / 2) for k in range(sides)]
        v += [(0.0, -length / 2, radius), (0.0, length / 2, radius)]
        a, b = 2 * sides, 2 * sides + 1
        t = []
        for k in range(sides):
            n = (k + 1) % sides
            t += [(a, k, n), (b, sides + n, sides + k), (k, sides + n, n), (k, sides + k, sides + n)]
        self.add(tag, v, t)

    def text(self):
        out = ["MESHv1"]
        out += ["v %.6f %.6f %.6f" % p for p in self.vertices]
        for tag, tris in self.objects:
            out.append("o " + tag)
            out += ["f %d %d %d" % t for t in tris]
        return "\n".join(out) + "\n"


def floor(m, x0, y0, x1, y1, z=0.0):
    m.box("floor", (x0, y0, z - 0.1), (x1, y1, z))


def walls(m, x0, y0, x1, y1, height=2.5, thickness=0.15):
    m.box("wall", (x0 - thickness, y0 - thickness, 0), (x1 + thickness, y0, height))
    m.box("wall", (x0 - thickness, y1, 0), (x1 + thickness, y1 + thickness, height))
    m.box("wall", (x0 - thickness, y0, 0), (x0, y1, height))
    m.box("wall", (x1, y0, 0), (x1 + thickness, y1, height))


def chair(m, cx, cy, back_dir):
    m.box("chair", (cx - 0.25, cy - 0.25, 0), (cx + 0.25, cy + 0.25, 0.42))
    bx, by = back_dir
    if bx:
        x = cx + bx * 0.25
        m.box("chair", (min(x, x + bx * 0.08), cy - 0.25, 0.42), (max(x, x + bx * 0.08), cy + 0.25, 0.9))
    else:
        y = cy + by * 0.25
        m.box("chair", (cx - 0.25, min(y, y + by * 0.08), 0.42), (cx + 0.25, max(y, y + by * 0.08), 0.9))


def scenes():
    out = {}

    m = Mesh()
    floor(m, 0, 0, 12, 8)
    walls(m, 0, 0, 12, 8)
    m.box("sofa", (0.5, 6.6, 0), (3.5, 7.6, 0.45))
    m.box("table", (4.5, 3.0, 0), (6.0, 4.2, 0.75))
    chair(m, 10.0, 6.0, (0, 1))
    out["lounge"] = m

    m = Mesh()
    floor(m, 0, 0, 12, 7)
    walls(m, 0, 0, 12, 7)
    m.box("counter", (10.9, 1.5, 0), (11.6, 5.5, 0.9))
    m.box("island", (4.5, 2.5, 0), (6.5, 4.0, 0.9))
    m.box("fridge", (0.2, 6.0, 0), (1.0, 6.8, 1.8))
    out["kitchen"] = m

    m = Mesh()
    floor(m, 0, 0, 11, 9)
    walls(m, 0, 0, 11, 9)
    m.box("wall", (0, 2.2, 0), (8.0, 2.4, 2.5))
    m.box("door", (10.9, 7.0, 0), (11.0, 8.0, 2.1))
    out["corridor"] = m

    m = Mesh()
    floor(m, 0, 0, 11, 8)
    walls(m, 0, 0, 11, 8)
    m.box("desk", (8.2, 1.5, 0), (9.6, 3.5, 0.75))
    chair(m, 7.5, 2.5, (1, 0))
    m.box("shelf", (1.0, 7.4, 0), (3.0, 7.9, 2.0))
    out["office"] = m

    m = Mesh()
    floor(m, -7, -1, 12, 7)
    m.box("building", (4.0, 0.0, 0), (10.0, 6.0, 3.0))
    m.box("ladder", (3.85, 2.75, 0), (4.0, 3.25, 3.0))
    out["rooftop"] = m

    m = Mesh()
    floor(m, 0, 0, 13, 9)
    for x, y in ((3.0, 4.5), (5.5, 1.5), (7.0, 6.5), (9.5, 3.0), (2.0, 7.5)):
        m.prism("tree", (x, y), 0.3, 0, 3.0)
    m.box("bench", (11.2, 7.0, 0), (12.6, 7.5, 0.45))
    out["garden"] = m

    m = Mesh()
    floor(m, 0, 0, 12, 4)
    walls(m, 0, 0, 12, 4)
    out["hallway"] = m

    m = Mesh()
    floor(m, 0, 0, 11, 8)
    walls(m, 0, 0, 11, 8)
    m.box("sofa", (0.5, 6.8, 0), (3.5, 7.8, 0.45))
    m.box("tv_stand", (9.0, 0.2, 0), (10.5, 0.6, 0.6))
    out["den"] = m

    m = Mesh()
    floor(m, 0, 0, 10, 8)
    walls(m, 0, 0, 10, 8)
    m.box("wall", (2.5, 2.4, 0), (10.0, 2.6, 2.5))
    out["bend"] = m
    return out


def obstacles():
    out = {}
    m = Mesh()
    m.prism("pumpkin", (0, 0), 0.2, 0, 0.35)
    out["pumpkin"] = m
    m = Mesh()
    m.box("box", (-0.2, -0.2, 0), (0.2, 0.2, 0.3))
    out["box"] = m
    m = Mesh()
    m.log("log", 1.0, 0.12)
    out["log"] = m
    m = Mesh()
    m.box("crate", (-0.25, -0.25, 0), (0.25, 0.25, 0.35))
    out["crate"] = m
    return out


NOISE_INTERACTION = {"translation_sigma": 0.0, "yaw_sigma": 0.15, "p_extra": 0.3}
NOISE_OBSTACLE = {"translation_sigma": 0.0, "yaw_sigma": 0.05, "p_extra": 0.1}


def goal(x, y, label="arrive", facing=None, layer=0, description=""):
    g = {"position": [x, y], "label": label, "layer": layer}
    if facing is not None:
        g["facing_deg"] = facing
    if description:
        g["description"] = description
    return g


def scenario(sid, scene, task, start, yaw, subgoals, noise, obstacles=(), layers=None, links=None, budget=3000):
    s = {
        "schema": "hsi-scenario/1",
        "id": sid,
        "fixture_note": "original fixture, not a SceneBench instance",
        "scene": "../../scenes/%s.mesh" % scene,
        "task": task,
        "start": {"position": list(start), "yaw_deg": yaw, "layer": 0},
        "nav": {"cell": 0.1, "clearance": 0.3, "layers": layers or [{"ground_z": 0.0, "require_support": False}]},
        "subgoals": subgoals,
        "noise": noise,
        "backend": {"kind": "rule"},
        "critic": True,
        "planner": True,
        "seeds": [0, 1, 2, 3, 4],
        "frame_budget": budget,
    }
    if links:
        s["links"] = links
    if obstacles:
        s["obstacles"] = list(obstacles)
    return s


def obstacle(mesh, x, y, trigger="at_start", yaw=0.0, tag=None):
    tag = tag or mesh
    return {"mesh": "../../obstacles/%s.mesh" % mesh, "position": [x, y, 0.0], "yaw_deg": yaw, "tag": tag,
            "seen": True, "trigger": trigger}


def interaction_scenarios():
    n = NOISE_INTERACTION
    return [
        scenario("lounge_sit", "lounge", "Walk across the lounge and sit on the armchair.", (1.0, 1.0), 0.0,
                 [goal(10.0, 5.25, "sit", -90.0, description="sit on the armchair")], n),
        scenario("kitchen_reach", "kitchen", "Go to the counter and grab a cup, then wait by the fridge.",
                 (1.0, 1.2), 0.0,
                 [goal(10.4, 3.5, "reach", 0.0, description="take the cup from the counter"),
                  goal(2.0, 5.2, "idle", description="wait by the fridge")], n),
        scenario("corridor_door", "corridor", "Walk down the corridor and around the bend to the door.",
                 (0.8, 1.1), 0.0,
                 [goal(9.5, 1.1), goal(10.0, 7.5, "arrive", 0.0, description="stand at the door")], n),
        scenario("office_sit_stand", "office", "Sit at the desk chair, then get up and take a book from the shelf.",
                 (1.0, 1.0), 0.0,
                 [goal(6.75, 2.5, "sit", 180.0, description="sit on the desk chair"),
                  goal(2.0, 6.8, "reach", 90.0, description="take a book from the shelf")], n),
        scenario("rooftop_climb", "rooftop", "Walk to the ladder, climb onto the roof and cross to the far side.",
                 (-5.5, 3.0), 0.0,
                 [goal(3.4, 3.0, "arrive", description="stand at the ladder"),
                  goal(9.0, 3.0, "arrive", layer=1, description="cross the roof")], n,
                 layers=[{"ground_z": 0.0, "require_support": False}, {"ground_z": 3.0, "require_support": True}],
                 links=[{"lower_layer": 0, "upper_layer": 1, "bottom": [3.4, 3.0], "top": [4.6, 3.0]}]),
        scenario("garden_bench", "garden", "Stroll between the trees to the bench and sit down.", (0.8, 0.8), 0.0,
                 [goal(11.9, 6.45, "sit", -90.0, description="sit on the bench")], n),
    ]


def obstacle_scenarios():
    n = NOISE_OBSTACLE
    return [
        scenario("hallway_pumpkin", "hallway", "Walk to the end of the hallway.", (1.0, 2.0), 0.0,
                 [goal(10.5, 2.0)], n, [obstacle("pumpkin", 5.5, 2.0)]),
        scenario("hallway_box_late", "hallway", "Walk to the end of the hallway.", (1.0, 2.0), 0.0,
                 [goal(10.5, 2.0)], n, [obstacle("box", 6.5, 2.0, {"within": 3.5})]),
        scenario("hallway_log", "hallway", "Walk to the end of the hallway.", (1.0, 2.0), 0.0,
                 [goal(10.5, 2.0)], n, [obstacle("log", 5.0, 2.0)]),
        scenario("hallway_two_pumpkins", "hallway", "Walk to the end of the hallway.", (1.0, 2.0), 0.0,
                 [goal(10.5, 2.0)], n, [obstacle("pumpkin", 4.0, 2.0), obstacle("pumpkin", 7.5, 2.0, tag="pumpkin_2")]),
        scenario("den_crate", "den", "Cross the den to the far corner.", (1.0, 1.2), 0.0,
                 [goal(9.5, 6.0)], n, [obstacle("crate", 5.25, 3.6, {"within": 3.5})]),
        scenario("bend_box", "bend", "Walk along the wall and turn up into the room.", (9.0, 1.2), 180.0,
                 [goal(1.2, 1.2), goal(1.2, 6.8)], n, [obstacle("box", 1.2, 4.0, {"within": 3.5})]),
    ]


def main():
    for sub in ("scenes", "obstacles", "scenarios/interaction", "scenarios/obstacle"):
        (DATA / sub).mkdir(parents=True, exist_ok=True)
    for name, mesh in scenes().items():
        (DATA / "scenes" / (name + ".mesh")).write_text(mesh.text())
    for name, mesh in obstacles().items():
        (DATA / "obstacles" / (name + ".mesh")).write_text(mesh.text())
    for kind, items in (("interaction", interaction_scenarios()), ("obstacle", obstacle_scenarios())):
        for s in items:
            path = DATA / "scenarios" / kind / (s["id"] + ".json")
            path.write_text(json.dumps(s, indent=2) + "\n")


if __name__ == "__main__":
    main()
