"""Rebuild the bundled market-data snapshot.

Sources: the daily S&P 500 and VIX files shipped inside the `arch` Python
package (arch/data/sp500, arch/data/vix; Yahoo Finance extracts).

    sp500.csv       S&P 500 closes, 1999-01-04 .. 2018-12-31 (real)
    vix.csv         VIX closes, 2014-01-03 .. 2019-01-03 (real)
    vix_proxy.csv   VIX-like index for 1999-01-04 .. 2018-12-31, built from
                    S&P returns only (EWMA variance, lambda 0.94, annualized
                    in percent and scaled to the mean level of the real VIX
                    on the overlapping dates). Use it where the real VIX
                    history is unavailable.
"""
import sys

import numpy as np
import pandas as pd
from arch.data import sp500, vix

out = sys.argv[1] if len(sys.argv) > 1 else "."

spx = sp500.load()["Close"]
spx.index = pd.to_datetime(spx.index)
spx.rename("Close").to_frame().to_csv(f"{out}/sp500.csv", index_label="Date",
                                      date_format="%Y-%m-%d", float_format="%.6f")

real = vix.load()["vix"]
real.index = pd.to_datetime(real.index)
real.rename("Close").to_frame().to_csv(f"{out}/vix.csv", index_label="Date",
                                       date_format="%Y-%m-%d", float_format="%.2f")

r = np.log(spx).diff().fillna(0.0).to_numpy()
var = np.empty_like(r)
var[0] = np.var(r[1:23])
for t in range(1, len(r)):
    var[t] = 0.94 * var[t - 1] + 0.06 * r[t] ** 2
proxy = pd.Series(100.0 * np.sqrt(252.0 * var), index=spx.index)
common = proxy.index.intersection(real.index)
proxy *= real[common].mean() / proxy[common].mean()
proxy.rename("Close").to_frame().to_csv(f"{out}/vix_proxy.csv", index_label="Date",
                                        date_format="%Y-%m-%d", float_format="%.2f")
print("corr(proxy, vix) on overlap:", np.corrcoef(proxy[common], real[common])[0, 1])
