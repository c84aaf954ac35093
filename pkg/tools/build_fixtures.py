"""Regenerate the shipped project fixtures under src/effortprop/data/.

    python tools/build_fixtures.py

highschool.json        published case-study data; the influence matrix is
                       partial (unknown entries are null).
highschool_synthetic.json
                       same factors, levels and significances, with 20
                       seeded synthetic expert opinion matrices so every
                       strategy can be evaluated end to end.
"""

import json
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "effortprop" / "data"

FACTORS = [
    # id, description, accessible, level label, excluded
    ("NTeach", "No. of teachers in the school", True, "II-A", False),
    ("NStud", "No. of students' intake", True, "VII", False),
    ("NSec", "No. of sections per class", True, "III", False),
    ("NStaff", "No. of non-teaching staff", True, "I-A", True),
    ("CIn", "Cleanliness of the school's environment", True, "I-A", True),
    ("Pabl", "Professional ability of teachers", False, "V", False),
    ("Funds", "Funding input", True, "I-C", False),
    ("Schol", "Opportunity for scholarships to students", True, "I-B", False),
    ("Infs", "Teaching infrastructure", True, "VI", False),
    ("Assgn", "Regular assignment giving and evaluation", True, "II-B", False),
    ("Prjct", "Project setup and evaluation", True, "IV", False),
    ("Int", "Internet availability on the campus", True, "I-B", False),
    ("IntTeach", "Use of Internet for teaching", True, "II-C", False),
    ("HighLow", "Higher-class students evaluating lower classes", True, "I-A", True),
    ("Doubt", "Regular doubt-clearing classes", True, "I-E", False),
    ("Cocurr", "Co-curricular activities for students", True, "I-D", False),
    ("TeachSat", "Teachers' satisfaction", False, "VIII", False),
    ("StudSat", "Students' satisfaction", False, "IX", False),
]

NSIG = {
    "NTeach": 0.027303, "NStud": 0.128171, "NSec": 0.053240, "NStaff": 0.004335,
    "CIn": 0.004411, "Pabl": 0.081339, "Funds": 0.011092, "Schol": 0.008334,
    "Infs": 0.101410, "Assgn": 0.034508, "Prjct": 0.065729, "Int": 0.008323,
    "IntTeach": 0.043022, "HighLow": 0.004411, "Doubt": 0.021127, "Cocurr": 0.015775,
    "TeachSat": 0.165636, "StudSat": 0.221834,
}

# published rows/columns of the normalized direct influence matrix
TABLE2_IDS = ["NTeach", "NStud", "NSec", "TeachSat", "StudSat"]
TABLE2 = [
    [0.0109, 0.0889, 0.0855, 0.0765, 0.0804],
    [0.0568, 0.0086, 0.0730, 0.0627, 0.0640],
    [0.0577, 0.0826, 0.0096, 0.0671, 0.0674],
    [0.0520, 0.0608, 0.0658, 0.0079, 0.0660],
    [0.0590, 0.0645, 0.0628, 0.0666, 0.0076],
]

D_TO_PABL = {
    "NTeach": 0.043144, "NStud": 0.061366, "NSec": 0.049348, "Funds": 0.051434,
    "Schol": 0.076881, "Infs": 0.076794, "Assgn": 0.085474, "Prjct": 0.07412,
    "Int": 0.067204, "IntTeach": 0.075234, "Doubt": 0.081132, "Cocurr": 0.077452,
}

# six-decimal values quoted in the worked HEAP example (successive blocks, so d' = d)
D_PRECISE = {("NStud", "TeachSat"): 0.062691, ("TeachSat", "StudSat"): 0.065971}

REFERENCE = {
    "note": "Published case-study values kept for documentation and regression tests.",
    "daf_count": 12,
    "latent": ["Pabl", "TeachSat", "StudSat"],
    "table4_efforts": {
        "NTeach": 0.052704, "NStud": 0.247418, "NSec": 0.102774, "Funds": 0.021411,
        "Schol": 0.016089, "Infs": 0.195760, "Assgn": 0.066613, "Prjct": 0.126881,
        "Int": 0.016066, "IntTeach": 0.083049, "Doubt": 0.040783, "Cocurr": 0.030451,
    },
    "upeap_inflows": {"Pabl": 0.068299, "TeachSat": 0.069753, "StudSat": 0.07239},
    "wpeap_inflows": {"Pabl": 0.067993, "TeachSat": 0.071553, "StudSat": 0.073197},
    "upeap_total_epi": 0.076337,
    "wpeap_total_epi": 0.109484,
    "dprime": [
        {"from": "TeachSat", "to": "StudSat", "value": 0.065971},
        {"from": "NStud", "to": "TeachSat", "value": 0.062691},
        {"from": "NStud", "to": "StudSat", "value": 0.068104},
    ],
    "uepf_path1": {"StudSat": 0.221834, "TeachSat": 0.180271, "NStud": 0.154580},
    "path1_bsr": [0.110510, 0.205672, 0.104451, 0.128953, 0.198956, 0.251458],
    "path1_uni_nsig_block1": {"Schol": 0.024659, "Funds": 0.032820, "Cocurr": 0.046676, "Doubt": 0.062512},
    "path_count": 3,
    "effective_block_count": 6,
    "trm_threshold": 0.1869,
    "heap_total_epi": {
        "(Uni, Uni)": [0.142770, 0.142685, 0.142565],
        "(Uni, nSig)": [0.143447, 0.143397, 0.143244],
        "(BSR, Uni)": [0.143781, 0.143672, 0.143729],
        "(BSR, nSig)": [0.144250, 0.144217, 0.144348],
        "(Uni, UEPF)": [0.142927, 0.142848, 0.142702],
        "(BEPR, Uni)": [0.143530, 0.143430, 0.143288],
        "(BSR, UEPF)": [0.143848, 0.143795, 0.143896],
        "(BEPR, nSig)": [0.144251, 0.144197, 0.144028],
        "(BEPR, UEPF)": [0.143698, 0.143603, 0.143434],
    },
}


def factor_json():
    return [
        {"id": fid, "name": name, "accessible": acc, "level": label, "excluded": exc}
        for fid, name, acc, label, exc in FACTORS
    ]


def partial_ndim():
    ids = [f[0] for f in FACTORS]
    pos = {fid: k for k, fid in enumerate(ids)}
    m = [[None] * len(ids) for _ in ids]
    for r, src in enumerate(TABLE2_IDS):
        for c, dst in enumerate(TABLE2_IDS):
            m[pos[src]][pos[dst]] = TABLE2[r][c]
    for src, v in D_TO_PABL.items():
        m[pos[src]][pos["Pabl"]] = v
    for (src, dst), v in D_PRECISE.items():
        m[pos[src]][pos[dst]] = v
    return m


def write_case_study_fixture():
    project = {
        "name": "highschool",
        "goal": "Student performance",
        "factors": factor_json(),
        "nsig": NSIG,
        "ndim": partial_ndim(),
        "options": {
            "threshold_rule": "mean_half_std",
            "peap_gating": False,
            "within_block_propagation": False,
        },
        "reference": REFERENCE,
    }
    (DATA / "highschool.json").write_text(json.dumps(project, indent=2) + "\n", encoding="utf-8")


def write_synthetic_fixture(experts=20, seed=20240601):
    rng = np.random.default_rng(seed)
    ids = [f[0] for f in FACTORS]
    n = len(ids)
    out_dir = DATA / "synthetic"
    out_dir.mkdir(exist_ok=True)
    refs = []
    for e in range(1, experts + 1):
        m = rng.integers(0, 7, size=(n, n))
        np.fill_diagonal(m, 0)
        name = f"expert{e:02d}.csv"
        with open(out_dir / name, "w", encoding="utf-8") as fh:
            fh.write("factor," + ",".join(ids) + "\n")
            for fid, row in zip(ids, m):
                fh.write(fid + "," + ",".join(str(int(x)) for x in row) + "\n")
        refs.append("synthetic/" + name)
    project = {
        "name": "highschool_synthetic",
        "goal": "Student performance",
        "factors": factor_json(),
        "nsig": NSIG,
        "opinions": refs,
        "options": {
            "threshold_rule": "mean_half_std",
            "peap_gating": False,
            "within_block_propagation": False,
            "trm_scale": "max_row_col_sum",
        },
    }
    (DATA / "highschool_synthetic.json").write_text(json.dumps(project, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    write_case_study_fixture()
    write_synthetic_fixture()
    print("wrote fixtures to", DATA)
