"""Shared model fixtures.

`two_path_model` is the four-node DAG with one unmeasured confounding path
(A <- U -> Y) and one measured amplifier path (A <- BAV -> Y), unit
variance budgets everywhere. `ten_amplifier_model` extends it to ten
measured causes of the treatment that jointly account for 90% of the
unmeasured confounder's variance.
"""

import json

import numpy as np
import pytest

from ampsim import parse_spec

# ten-amplifier configuration: weights of the amplifiers on the confounder
# (PSI) and on the treatment (GAMMA); PSI @ PSI == 0.9 exactly.
PSI = np.array([-0.55, -0.45, -0.3, 0.30, 0.25, 0.20, -0.20, 0.20, -0.15, 0.10])
GAMMA = np.array([-0.1, -0.15, -0.1, 0.21, -0.2, 0.3, -0.2, -0.15, -0.2, 0.075])
TEN_AMP_TRUTH = 0.7
TEN_AMP_CONFOUNDER_EFFECT = -0.5
TEN_AMP_TREATMENT_CONFOUNDING = 0.59


def two_path_spec_dict(*, beta_a=0.2, beta_u=0.3, beta_bav=-0.05,
                       gamma_u=0.3, gamma_bav=0.6):
    return {
        "nodes": [
            {"name": "U", "variance": 1, "observed": False},
            {"name": "BAV", "variance": 1},
            {"name": "A", "variance": 1},
            {"name": "Y", "variance": 1},
        ],
        "edges": [
            {"from": "U", "to": "A", "coef": gamma_u},
            {"from": "BAV", "to": "A", "coef": gamma_bav},
            {"from": "A", "to": "Y", "coef": beta_a},
            {"from": "U", "to": "Y", "coef": beta_u},
            {"from": "BAV", "to": "Y", "coef": beta_bav},
        ],
    }


def two_path_model(**kwargs):
    return parse_spec(json.dumps(two_path_spec_dict(**kwargs)))


def ten_amplifier_spec_dict():
    nodes = [{"name": f"BAV{i + 1}", "variance": 1} for i in range(10)]
    nodes.append({"name": "U", "variance": 1, "observed": False})
    nodes.append({"name": "A", "variance": 1})
    nodes.append({"name": "Y", "variance": 1})
    edges = []
    for i in range(10):
        edges.append({"from": f"BAV{i + 1}", "to": "U", "coef": float(PSI[i])})
        edges.append({"from": f"BAV{i + 1}", "to": "A", "coef": float(GAMMA[i])})
    edges.append({"from": "U", "to": "A", "coef": TEN_AMP_TREATMENT_CONFOUNDING})
    edges.append({"from": "A", "to": "Y", "coef": TEN_AMP_TRUTH})
    edges.append({"from": "U", "to": "Y", "coef": TEN_AMP_CONFOUNDER_EFFECT})
    return {"nodes": nodes, "edges": edges}


def ten_amplifier_model():
    return parse_spec(json.dumps(ten_amplifier_spec_dict()))


@pytest.fixture
def two_path():
    return two_path_model()


@pytest.fixture
def ten_amplifier():
    return ten_amplifier_model()
