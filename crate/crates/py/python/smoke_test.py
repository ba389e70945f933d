"""Quick check that the extension imports and agrees with known values."""

import svd_dynamics as svd

const = svd.System("circle", 8, "constant_full")
assert len(const) == 8
assert const.distance(0, 4) == "1/2"
assert const.image(3) == list(range(8))
assert const.dn(0, 4, 3) == "1/2"

# Separated points stay constant while separated orbits grow.
assert const.count("S", 3, "1/4", exact=True) == (2, 2)
assert const.count("s", 3, "1/4", exact=True) == (12, 12)
assert const.count("s", 2, "1/4")[0] <= 5

blur = svd.System("circle", 16, "blurred_doubling", delta="1/8")
assert blur.count("s", 3, "1/8", exact=True) == (32, 32)
lo, hi = blur.count("r", 3, "1/8", exact=True)
assert lo == hi == 13
assert blur.mixing(32)[0]

rot = svd.System("circle", 64, "rotation_interval", k=3)
assert rot.cw_check("2/5", 40)
assert not svd.System("circle", 64, "rotation", k=3).cw_check("1/4", 40)

assert const.spec_check([(3, 2)], "1/8") is None
z, dists = const.spec_check([(5, 0)], "1/32")
assert z == 5 and dists == ["0"]

assert abs(svd.entropy_rate([(1, 2), (2, 4), (3, 8)]) - 0.6931471805599453) < 1e-12
assert svd.rational("2/8") == "1/4"

csv, summary, violation = svd.reproduce("constant-se-zero")
assert csv.startswith("# svd-csv v1 task=reproduce\n") and not violation

config = '{"system": {"space": {"kind": "circle", "q": 4}, "map": {"kind": "doubling"}}}'
csv, _, _ = svd.run_task("dn-matrix", config)
assert csv.count("\n") == 18

for bad in (lambda: svd.System("circle", 8, "rotation"),
            lambda: svd.run_task("nope", config),
            lambda: svd.reproduce("nope"),
            lambda: const.count("x", 1, "1/4")):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

print("smoke test ok:", sorted(svd.PRESETS))
