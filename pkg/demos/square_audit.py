"""Walk through one audit: the unit square with beta = 1.

Every inequality is printed with its two sides, the signed margin and the
finite-element error budget that margin is judged against.
"""

from robinlab import audit, dirichlet_audit, rectangle

square = rectangle(1.0, 1.0)
report, record = audit(square, beta=1.0)

print(f"T_beta      = {report.T_robin.value:.8f}  (+- {report.T_robin.error_estimate:.1e})")
print(f"lambda_beta = {report.lambda_robin.value:.8f}  (+- {report.lambda_robin.error_estimate:.1e})")
print(f"Dirichlet T = {report.T_dirichlet.value:.8f}, M = {report.M_dirichlet.value:.8f}")
print()

full = record.merged(dirichlet_audit(square, dirichlet=(report.T_dirichlet, report.M_dirichlet)))
print(f"{'id':26s} {'lhs':>14s} {'rhs':>14s} {'margin':>11s} {'budget':>9s}  status")
for e in full:
    print(f"{e.id:26s} {e.lhs:14.8g} {e.rhs:14.8g} {e.margin:11.3e} {e.budget:9.1e}  {e.status}")

print()
print("gating failures:", len(full.failures()))
