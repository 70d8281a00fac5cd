"""Hand-written backward passes checked against central differences."""
from gastereo.gradcheck import SGA_SHAPES, check_head, check_lga, check_sga, run_all

for shape in SGA_SHAPES:
    err, ok = check_sga(shape, seed=0)
    print(f"sga  {shape}: max rel err {err:.2e} {'ok' if ok else 'FAIL'}")

err, ok = check_lga((4, 4, 5, 1), seed=0, K=3, repeats=2)
print(f"lga  (4, 4, 5, 1): max rel err {err:.2e} {'ok' if ok else 'FAIL'}")
err, ok = check_head((3, 4, 6, 1), seed=0)
print(f"head (3, 4, 6, 1): max rel err {err:.2e} {'ok' if ok else 'FAIL'}")

print()
for r in run_all(seed=1):
    print(r.line())
