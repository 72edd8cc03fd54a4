"""Check the trilinear-estimate parameter conditions for a range of ell.

Run:  python3 demos/03_bourgain_parameters.py
"""

from zakharov_lab import bourgain

reports, labels = [], []
for ell in (0.0, 0.5, 1.0, 1.2):
    mp = bourgain.lemma34_parameters(ell, eps_bar=0.01, eps=0.02, eps0=0.01)
    reports.append(bourgain.check_lemma32(mp.region1))
    labels.append(f"N1 ell={ell:g}")
    print(f"ell={ell:g}: theta={mp.theta:.4f}, all regions pass: {mp.passes()}")
print()
print(bourgain.format_condition_table(reports, labels))
