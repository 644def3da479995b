"""The equilibrium constants as printed.

The closed form for M* gives zero when Mp = 0 and a negative value for every
Mp > 0, so it cannot serve as an almost-everywhere bound on |f - y|. The
calculator reports the printed values and raises a warning flag instead of
guessing a corrected formula.

Run:  python3 demos/equilibrium.py
"""

# %%
from interpreg import equilibrium_constants

print(f"{'Mp':>5} {'|f|_inf':>8} {'disc':>8} {'M*':>9} {'R*':>9} {'feasible':>9} {'warning':>8}")
for m_p, f_sup in [(0.0, 5.0), (0.5, 5.0), (1.0, 5.0), (1.5, 5.0), (2.0, 2.0)]:
    r = equilibrium_constants(m_p, f_sup, j_norm=1.0)
    print(f"{m_p:5.1f} {f_sup:8.1f} {r.discriminant:8.2f} {r.m_star:9.4f} {r.r_star:9.4f} "
          f"{str(r.feasible):>9} {str(r.warning):>8}")
