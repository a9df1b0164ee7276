#!/usr/bin/env python3
"""Writes the golden_square fixture: POI, annotations, scenarios, port recordings.

Coordinates are metres in the POI frame (x east, y north, origin at the
statue). Run from the repo root: python3 tools/make_golden_square.py
"""
import json
import os

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "golden_square")


def obj(oid, cls, center, half_w, half_d, yaw=0.0, aliases=()):
    return {"id": oid, "class": cls, "aliases": list(aliases), "center": list(center),
            "yaw_deg": yaw, "half_w": half_w, "half_d": half_d}


def build_poi():
    objects = [obj("statue_1", "statue", (0, 0), 0.6, 0.6, aliases=["monument"])]
    bed = ["flowerbed", "planter"]
    objects += [
        obj("flower_bed_central", "flower bed", (0, 0), 2.5, 2.5, aliases=bed),
        obj("flower_bed_west", "flower bed", (-11, 0), 2.5, 6.0, aliases=bed),
        obj("flower_bed_east", "flower bed", (11, 0), 2.5, 6.0, aliases=bed),
    ]
    podiums = [(-14, 11.5), (14, 15.5), (-14, -9), (14, -9), (-2.5, -7.5), (2.5, -7.5)]
    objects += [obj(f"podium_{i + 1}", "podium", c, 0.4, 0.4, aliases=["stone podium", "plinth"])
                for i, c in enumerate(podiums)]
    objects.append(obj("ramp_1", "ramp", (0, -18), 1.0, 2.0))
    objects += [obj("stairs_1", "stairs", (-18.8, -16), 1.2, 1.5, aliases=["steps", "staircase"]),
                obj("stairs_2", "stairs", (18.8, -16), 1.2, 1.5, aliases=["steps", "staircase"])]
    objects += [obj("table_tennis_1", "table tennis table", (-10, -13), 1.4, 0.8,
                    aliases=["ping pong table"]),
                obj("table_tennis_2", "table tennis table", (10, -13), 1.4, 0.8,
                    aliases=["ping pong table"])]
    nb = ["board", "historical notice board", "sign"]
    objects += [obj("notice_board_west", "notice board", (-19.5, 0), 0.6, 0.1, yaw=90, aliases=nb),
                obj("notice_board_east", "notice board", (19.5, 0), 0.6, 0.1, yaw=90, aliases=nb),
                obj("notice_board_south", "notice board", (2.3, -19.6), 0.6, 0.1, aliases=nb)]

    benches = []
    for x in (-12, -6, 0, 6, 12):
        benches.append(((x, 18.5), 0.0))
    for x in (-13, -8, -4, 4, 8):
        benches.append(((x, -18.5), 0.0))
    for y in (-10, -5, 5, 10, 15):
        benches.append(((-18.5, y), 90.0))
    for y in (-10, -5, 5, 10, 15):
        benches.append(((18.5, y), 90.0))
    bins = []
    for i, ((x, y), yaw) in enumerate(benches):
        objects.append(obj(f"bench_{i + 1}", "bench", (x, y), 0.9, 0.3, yaw=yaw, aliases=["seat"]))
        bins.append((x + 1.3, y) if yaw == 0.0 else (x, y + 1.3))
    bins += [(15.5, 12.5), (-17.5, 17.5), (17.5, 17.5), (-16, -19), (16, -19), (-2, 18.8)]
    for i, c in enumerate(bins):
        objects.append(obj(f"trash_bin_{i + 1}", "trash bin", c, 0.3, 0.3,
                           aliases=["bin", "rubbish bin", "litter bin"]))
    assert len(objects) == 64, len(objects)
    return {
        "poi_id": "golden_square",
        "anchor": {"lat": 51.5115, "lon": -0.1370},
        "walkable": [[[-20, -20], [20, -20], [20, 20], [-20, 20]]],
        "objects": objects,
    }


# (id, category, text, anchor)
ROWS = [
    (1, "accessibility", "The ground in this square is not level. It includes uneven stones and grassy areas.", {"point": [-6, -12]}),
    (2, "accessibility", "There are no public toilets in this square, but there are some at the nearby station, including one accessible toilet.", {"point": [6, -16]}),
    (3, "accessibility", "Visitors must adhere to rules, including no ball games, cycling, or alcohol, and keeping dogs on a leash.", {"object": "notice_board_west"}),
    (4, "accessibility", "The local square is open seven days a week, from 8am until at least 8pm in the summer.", {"point": [-4, -17]}),
    (5, "accessibility", "Watch out for the stairs. There are four steps.", {"object": "stairs_1"}),
    (6, "accessibility", "Watch out for the stairs. There are four steps.", {"object": "stairs_2"}),
    (7, "accessibility", "Here is a 4-meter-long ramp. Watch out for a small hole near the bottom to avoid tripping!", {"object": "ramp_1"}),
    (8, "amenity", "Across the street, there’s a café with arguably the best flat white in town!", {"point": [-17, 8]}),
    (9, "amenity", "This notice board advertises various local community programs and support services in the area, covering outdoor activities, health and wellbeing, and cost of living assistance.", {"object": "notice_board_south"}),
    (10, "amenity", "Just south, there's a block that has retail and leisure spots.", {"point": [8, -17]}),
    (11, "amenity", "The closest bus stop is at the local toy store, just west of the square.", {"point": [-18, -3]}),
    (12, "attraction", "These white and pink roses are a gift to the city from Bulgarian locals.", {"object": "flower_bed_west"}),
    (13, "attraction", "The square has a rich history, evolving from an aristocratic residential area to a trade hub, finally becoming a public garden after WWII.", {"object": "notice_board_east"}),
    (14, "attraction", "There are yellow Coreopsis, pink Osteospermum and purple Salvia in the flower bed.", {"object": "flower_bed_east"}),
    (15, "attraction", "This statue was accidentally won at an auction, when someone waved to greet a friend. He ended up giving the statue as a gift to this square.", {"object": "statue_1"}),
    (16, "attraction", "There's confusion about whether this statue represents a king from the early or late 1600s.", {"object": "statue_1"}),
    (17, "attraction", "There are yellow Coreopsis, pink Osteospermum and purple Salvia in the flower bed.", {"object": "flower_bed_central"}),
    (18, "experience", "We used the flowerbeds as a hiding spot for stolen biscuits until the ants discovered our stash.", {"point": [-8, -3]}),
    (19, "experience", "I once declared myself “King of the Square” from the podium and was dethroned five minutes later by a well-aimed pinecone.", {"object": "podium_3"}),
    (20, "experience", "Hi, this is Ben! Meet me here!", {"point": [14.8, 11.8]}),
    (21, "experience", "Hi, this is Emma! Meet me here!", {"point": [-14, 10.2]}),
    (22, "layout", "This square has grassy areas on the outside edges and a higher platform in the center.", {"point": [0, 16]}),
    (23, "layout", "This is the one of the two podiums with a vase on it. All the others here are bare.", {"object": "podium_1"}),
    (24, "layout", "This is one of two podiums with a vase, and the only one containing succulents.", {"object": "podium_2"}),
    (25, "layout", "The two historical notice boards in this square are identical, talking about the history and rules.", {"object": "notice_board_west"}),
    (26, "layout", "There aren’t any cross-walks at any of the entrances, but the streets are generally quiet.", {"point": [-3, -19.3]}),
    (27, "layout", "Two identical flower beds sit to the left and right of a central flower bed with a statue in it.", {"point": [-6, -6]}),
    (28, "safety", "Watch out—there’s an elevated flower bed with stone edges and concave cutouts at the corners. Be careful not to trip!", {"object": "flower_bed_west"}),
    (29, "safety", "Watch out for the podium! It's close to the flower bed’s edge.", {"object": "podium_6"}),
    (30, "safety", "Watch out, there’s a podium!", {"object": "podium_1"}),
    (31, "safety", "Watch out, there’s a podium!", {"object": "podium_2"}),
    (32, "safety", "Watch out, there’s a podium!", {"object": "podium_3"}),
    (33, "safety", "Watch out, there’s a podium!", {"object": "podium_4"}),
    (34, "safety", "Watch out, there’s a podium!", {"object": "podium_5"}),
    (35, "safety", "Watch out for the elevated square-shaped flower bed in the center! Be careful not to trip.", {"object": "flower_bed_central"}),
    (36, "safety", "Watch out for the table tennis table! People love to play ping pong here.", {"object": "table_tennis_1"}),
    (37, "safety", "Watch out for the table tennis table! Many parents bring their kids here.", {"object": "table_tennis_2"}),
    (38, "safety", "Watch out—there’s an elevated flower bed with stone edges and concave cutouts at the corners. Be careful not to trip!", {"object": "flower_bed_east"}),
    (39, "safety", "Watch out for tree branches hanging from the potted plants here!", {"point": [12, 17]}),
]


def build_annotations():
    lines = []
    for rid, cat, text, anchor in ROWS:
        lines.append({"id": str(rid), "author": "research_team", "category": cat, "text": text,
                      "anchor": anchor, "created_at": float(rid), "updated_at": float(rid),
                      "pinned": True})
    return lines


START = {"x": 0.0, "y": -15.5, "heading": 0.0}


def scenarios():
    base = {"poi": "poi.json", "annotations": "annotations.jsonl", "start": START, "seed": 7,
            "mode": "autopilot", "prefs": {}}
    emma = dict(base, name="emma", goal={"annotation": "21"})
    ben = dict(base, name="ben", goal={"annotation": "20"})
    drift = dict(emma, name="emma_drift",
                 drift={"kind": "bias", "offset": [1.08, 1.69], "start_progress": 0.8})
    ramp = dict(base, name="ramp_walk", mode="scripted",
                start={"x": 1.0, "y": -15.5, "heading": 0.0},
                script=[{"t": 0.0, "action": "advance"}, {"t": 11.5, "action": "stop"}])
    return {"emma.json": emma, "ben.json": ben, "emma_drift.json": drift, "ramp_walk.json": ramp}


PORTS = {
    "visual.json": {"entries": {
        "what color is the bench": "The bench in front of you is dark green with wooden slats.",
        "is there anyone on the bench": "The bench looks empty right now.",
        "what is in front of me": "A low flower bed with a stone edge is about two meters ahead.",
    }},
    "web.json": {"entries": {
        "when was the square built": "The square was laid out in the late 1600s.",
        "who is the statue of": "The statue is usually said to show a king from the 1600s.",
    }},
    "map.json": {"entries": {
        "where is the nearest bus stop": "The nearest bus stop is about 150 meters west of the square.",
        "is there a cafe nearby": "There is a cafe across the street on the north side.",
    }},
}


def main():
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "poi.json"), "w", encoding="utf-8") as f:
        json.dump(build_poi(), f, indent=1, ensure_ascii=False)
        f.write("\n")
    with open(os.path.join(OUT, "annotations.jsonl"), "w", encoding="utf-8") as f:
        for line in build_annotations():
            f.write(json.dumps(line, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n")
    for name, doc in scenarios().items():
        with open(os.path.join(OUT, name), "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")
    os.makedirs(os.path.join(OUT, "ports"), exist_ok=True)
    for name, doc in PORTS.items():
        with open(os.path.join(OUT, "ports", name), "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
