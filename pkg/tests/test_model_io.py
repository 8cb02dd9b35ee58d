import json

import numpy as np
import pytest

from treeuq import (InvalidInputError, ParseError, UnsupportedModelError,
                    parse_model, predict, predict_many)
from treeuq.gbrt import to_json
from treeuq.model_io import load_model, sniff_format

from fixture_utils import fixture_files

LGB_HAND = """tree
version=v3
num_class=1
num_tree_per_iteration=1
label_index=0
max_feature_idx=1
objective=regression

Tree=0
num_leaves=3
num_cat=0
split_feature=0 1
split_gain=0 0
threshold=0.5 -1.0
decision_type=10 0
left_child=1 -1
right_child=-3 -2
leaf_value=10.0 20.0 30.0
shrinkage=1

Tree=1
num_leaves=1
leaf_value=5.0
shrinkage=1

end of trees
"""


def test_lightgbm_hand_model_routing():
    model = parse_model(LGB_HAND, "lightgbm-text")
    assert model.n_trees == 2
    assert model.base_score == 0.0 and model.learning_rate == 1.0
    cases = [
        ([0.3, -2.0], 15.0),   # left then left
        ([0.3, 0.0], 25.0),    # left then right
        ([0.9, 0.0], 35.0),    # right leaf
        ([np.nan, -2.0], 15.0),  # NaN default-left at the root (dt=10)
        ([0.3, np.nan], 25.0),   # missing_type none: NaN acts as 0.0 > -1
    ]
    for x, want in cases:
        assert predict(model, x) == pytest.approx(want, abs=0)


def test_lightgbm_leaf_ids_dense_with_translation():
    model = parse_model(LGB_HAND, "lightgbm-text")
    tree = model.trees[0]
    ids = tree.leaf_id[tree.leaf_id >= 0]
    assert sorted(ids.tolist()) == list(range(tree.n_leaves))
    assert tree.source_leaf_ids is not None
    assert sorted(tree.source_leaf_ids.tolist()) == [0, 1, 2]


def test_lightgbm_errors():
    with pytest.raises(UnsupportedModelError):
        parse_model(LGB_HAND.replace("decision_type=10 0",
                                     "decision_type=11 0"), "lightgbm-text")
    with pytest.raises(UnsupportedModelError):
        parse_model(LGB_HAND.replace("objective=regression",
                                     "objective=binary sigmoid:1"),
                    "lightgbm-text")
    with pytest.raises(ParseError) as e:
        parse_model(LGB_HAND.replace("threshold=0.5 -1.0\n", ""),
                    "lightgbm-text")
    assert "line" in str(e.value)
    with pytest.raises(ParseError):
        parse_model("just some text\n", "lightgbm-text")


def test_unknown_format_tag():
    with pytest.raises(InvalidInputError):
        parse_model("{}", "catboost-binary")


def test_native_round_trip_structural_identity(small_problem):
    _, model = small_problem
    text = to_json(model)
    back = parse_model(text.encode(), "native-json")
    assert to_json(back) == text


def test_xgboost_errors():
    doc = {"learner": {"learner_model_param": {"num_class": "3"},
                       "gradient_booster": {"model": {"trees": []}},
                       "objective": {"name": "multi:softmax"}}}
    with pytest.raises(UnsupportedModelError):
        parse_model(json.dumps(doc), "xgboost-json")
    with pytest.raises(ParseError) as e:
        parse_model('{"learner": {', "xgboost-json")
    assert e.value.offset is not None
    with pytest.raises(ParseError):
        parse_model('{"not_a_model": 1}', "xgboost-json")


@pytest.mark.parametrize("name,fmt", [("lgbm_small", "lightgbm-text"),
                                      ("xgb_small", "xgboost-json")])
def test_committed_fixture_parity(name, fmt):
    model_path, inputs, recorded = fixture_files(name)
    model = load_model(model_path, fmt)
    got = predict_many(model, inputs)
    assert np.max(np.abs(got - recorded)) <= 1e-6


def test_xgb_fixture_base_score():
    model_path, _, _ = fixture_files("xgb_small")
    model = load_model(model_path, "xgboost-json")
    assert model.base_score == 0.5
    assert model.learning_rate == 1.0


def test_fixture_leaf_id_invariant():
    for name, fmt in [("lgbm_small", "lightgbm-text"),
                      ("xgb_small", "xgboost-json")]:
        model_path, _, _ = fixture_files(name)
        model = load_model(model_path, fmt)
        for tree in model.trees:
            ids = tree.leaf_id[tree.leaf_id >= 0]
            assert sorted(ids.tolist()) == list(range(tree.n_leaves))


REAL_STYLE_LGB = """tree
version=v4
num_class=1
num_tree_per_iteration=1
label_index=0
max_feature_idx=2
objective=regression
feature_names=Column_0 Column_1 Column_2
feature_infos=[0.001:0.998] [-3.2:2.9] none
tree_sizes=424

Tree=0
num_leaves=3
num_cat=0
split_feature=0 1
split_gain=12.5 3.25
threshold=0.50000000000000011 1.0000000180025095e-35
decision_type=2 2
left_child=1 -1
right_child=-3 -2
leaf_value=-0.10000000000000001 0.20000000000000001 0.29999999999999999
leaf_weight=20 21 22
leaf_count=20 21 22
internal_value=0.01 0.02
internal_weight=0 41
internal_count=63 41
is_linear=0
shrinkage=0.1


end of trees

feature_importances:
Column_0=1
Column_1=1

parameters:
[boosting: gbdt]
[objective: regression]
end of parameters

pandas_categorical:null
"""


def test_lightgbm_real_style_decorations():
    """Version banners, feature_infos ranges, tree_sizes, and the
    trailing importance/parameter sections must all be tolerated; a
    decision_type of 2 (default-left, missing-type none) must route
    NaN as 0.0."""
    model = parse_model(REAL_STYLE_LGB, "lightgbm-text")
    assert model.n_trees == 1 and model.n_features == 3
    assert predict(model, [0.3, -1.0, 0.0]) == pytest.approx(-0.1)
    assert predict(model, [0.3, 1.0, 0.0]) == pytest.approx(0.2)
    assert predict(model, [0.9, 0.0, 0.0]) == pytest.approx(0.3)
    # NaN behaves like 0.0 here: 0.0 <= 0.5 goes left, 0.0 <= 1e-35 left
    assert predict(model, [np.nan, np.nan, 0.0]) == pytest.approx(-0.1)


def test_xgboost_real_style_decorations():
    doc = {
        "learner": {
            "attributes": {"best_iteration": "0"},
            "feature_names": ["a", "b"],
            "feature_types": ["float", "float"],
            "gradient_booster": {
                "model": {
                    "gbtree_model_param": {"num_parallel_tree": "1",
                                           "num_trees": "1"},
                    "iteration_indptr": [0, 1],
                    "trees": [{
                        "base_weights": [0.0, -1.0, 2.0],
                        "categories": [], "categories_nodes": [],
                        "categories_segments": [], "categories_sizes": [],
                        "default_left": [1, 0, 0],
                        "id": 0,
                        "left_children": [1, -1, -1],
                        "loss_changes": [10.0, 0.0, 0.0],
                        "parents": [2147483647, 0, 0],
                        "right_children": [2, -1, -1],
                        "split_conditions": [0.5, -1.0, 2.0],
                        "split_indices": [1, 0, 0],
                        "split_type": [0, 0, 0],
                        "sum_hessian": [3.0, 2.0, 1.0],
                        "tree_param": {"num_deleted": "0",
                                       "num_feature": "2",
                                       "num_nodes": "3",
                                       "size_leaf_vector": "1"},
                    }],
                    "tree_info": [0],
                },
                "name": "gbtree",
            },
            "learner_model_param": {"base_score": "5E-1",
                                    "boost_from_average": "1",
                                    "num_class": "0", "num_feature": "2",
                                    "num_target": "1"},
            "objective": {"name": "reg:squarederror",
                          "reg_loss_param": {"scale_pos_weight": "1"}},
        },
        "version": [2, 0, 3],
    }
    model = parse_model(json.dumps(doc), "xgboost-json")
    assert model.base_score == 0.5  # parsed from the "5E-1" string
    # strict routing: value < 0.5 goes left
    assert predict(model, [9.9, 0.49]) == pytest.approx(0.5 - 1.0)
    assert predict(model, [9.9, 0.5]) == pytest.approx(0.5 + 2.0)
    assert predict(model, [9.9, np.nan]) == pytest.approx(0.5 - 1.0)


def test_sniff_format(tmp_path, small_problem):
    _, model = small_problem
    native = tmp_path / "m.json"
    native.write_text(to_json(model))
    assert sniff_format(native) == "native-json"
    lgb = tmp_path / "m.txt"
    lgb.write_text(LGB_HAND)
    assert sniff_format(lgb) == "lightgbm-text"
    model_path, _, _ = fixture_files("xgb_small")
    assert sniff_format(model_path) == "xgboost-json"
