#pragma once

#include <vector>

namespace finbench::eval {

// Half-open index ranges; retrain covers train + validation combined
// ([z - Y - X, z - 1] in calendar terms for a trade day z).
struct Window {
  int train_begin, train_end;
  int valid_begin, valid_end;
  int trade_begin, trade_end;
  int retrain_begin, retrain_end;
};

struct WindowSchedule {
  int total = 0;
  int train_len = 0, valid_len = 0, trade_len = 0, roll = 0;
  std::vector<Window> windows;
};

// Enumerates rolling windows over `total` periods; errors when no full
// train + valid + trade window fits.
WindowSchedule make_windows(int total, int train, int valid, int trade, int roll);

}  // namespace finbench::eval
