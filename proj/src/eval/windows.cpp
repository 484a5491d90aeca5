#include "finbench/eval/windows.hpp"

#include <string>

#include "finbench/util/error.hpp"

namespace finbench::eval {

WindowSchedule make_windows(int total, int train, int valid, int trade, int roll) {
  if (train < 1 || valid < 0 || trade < 1 || roll < 1) {
    fail(Errc::InvalidArgument, "window lengths must be positive (validation may be 0)");
  }
  const int span = train + valid + trade;
  if (total < span) {
    fail(Errc::InsufficientData, "need " + std::to_string(span) + " periods for one window, have " +
                                     std::to_string(total));
  }
  WindowSchedule schedule;
  schedule.total = total;
  schedule.train_len = train;
  schedule.valid_len = valid;
  schedule.trade_len = trade;
  schedule.roll = roll;
  for (int start = 0; start + span <= total; start += roll) {
    Window w;
    w.train_begin = start;
    w.train_end = start + train;
    w.valid_begin = w.train_end;
    w.valid_end = w.valid_begin + valid;
    w.trade_begin = w.valid_end;
    w.trade_end = w.trade_begin + trade;
    w.retrain_begin = w.train_begin;
    w.retrain_end = w.valid_end;
    schedule.windows.push_back(w);
  }
  return schedule;
}

}  // namespace finbench::eval
