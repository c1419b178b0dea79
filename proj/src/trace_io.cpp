#include "bkf/trace_io.hpp"

#include "bkf/csv.hpp"
#include "bkf/error.hpp"

#include <sstream>

namespace bkf {
namespace {

long sweep_number(const Trace& t, Index draw) {
  return static_cast<long>(t.burn_in) + static_cast<long>(draw + 1) * t.thin;
}

}  // namespace

std::string trace_to_csv(const Trace& trace, const Vector* sigma2) {
  std::ostringstream os;
  csv::Writer w(os);
  const Index p = trace.p();
  const bool with_delta = trace.delta.size() == trace.draws() && trace.draws() > 0;
  w.field("iter");
  for (Index j = 0; j < p; ++j) w.field("beta_" + std::to_string(j + 1));
  for (Index j = 0; j < p; ++j) w.field("betak_" + std::to_string(j + 1));
  if (sigma2 != nullptr) w.field("sigma2");
  if (with_delta) w.field("delta");
  w.end_row();
  for (Index t = 0; t < trace.draws(); ++t) {
    w.field(sweep_number(trace, t));
    for (Index j = 0; j < p; ++j) w.field(trace.beta(t, j));
    for (Index j = 0; j < p; ++j) w.field(trace.betak(t, j));
    if (sigma2 != nullptr) w.field((*sigma2)(t));
    if (with_delta) w.field(trace.delta(t));
    w.end_row();
  }
  return os.str();
}

std::string delta_to_csv(const Trace& trace) {
  std::ostringstream os;
  csv::Writer w(os);
  w.field("iter").field("delta").end_row();
  for (Index t = 0; t < trace.delta.size(); ++t) {
    w.field(sweep_number(trace, t)).field(trace.delta(t)).end_row();
  }
  return os.str();
}

LoadedTrace read_trace_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::string source = path.string();
  if (table.column("iter") != 0) {
    throw Error(ErrorCode::ParseError, source + ": first column must be 'iter'");
  }
  Index p = 0;
  while (table.column("beta_" + std::to_string(p + 1)) >= 0) ++p;
  if (p == 0) throw Error(ErrorCode::ParseError, source + ": no beta_1.. columns");
  std::vector<long> beta_cols, betak_cols;
  for (Index j = 0; j < p; ++j) {
    beta_cols.push_back(table.column("beta_" + std::to_string(j + 1)));
    const long kc = table.column("betak_" + std::to_string(j + 1));
    if (kc < 0) {
      throw Error(ErrorCode::ParseError,
                  source + ": missing column 'betak_" + std::to_string(j + 1) + "'");
    }
    betak_cols.push_back(kc);
  }
  const long s2col = table.column("sigma2");
  const long dcol = table.column("delta");
  const auto draws = static_cast<Index>(table.rows.size());
  if (draws == 0) throw Error(ErrorCode::EmptyTrace, source + ": trace has no draws");

  LoadedTrace out;
  out.trace.beta.resize(draws, p);
  out.trace.betak.resize(draws, p);
  if (dcol >= 0) out.trace.delta.resize(draws);
  if (s2col >= 0) out.sigma2 = Vector(draws);
  for (Index t = 0; t < draws; ++t) {
    const auto& rec = table.rows[static_cast<std::size_t>(t)];
    const std::size_t line = static_cast<std::size_t>(t) + 2;
    auto num = [&](long c) {
      return csv::parse_double(rec[static_cast<std::size_t>(c)], source, line,
                               table.header[static_cast<std::size_t>(c)]);
    };
    out.iterations.push_back(static_cast<long>(num(0)));
    for (Index j = 0; j < p; ++j) {
      out.trace.beta(t, j) = num(beta_cols[static_cast<std::size_t>(j)]);
      out.trace.betak(t, j) = num(betak_cols[static_cast<std::size_t>(j)]);
    }
    if (dcol >= 0) out.trace.delta(t) = num(dcol);
    if (s2col >= 0) (*out.sigma2)(t) = num(s2col);
  }
  if (draws >= 2) {
    out.trace.thin = static_cast<int>(out.iterations[1] - out.iterations[0]);
    if (out.trace.thin < 1) out.trace.thin = 1;
  }
  out.trace.burn_in = static_cast<int>(out.iterations[0] - out.trace.thin);
  return out;
}

}  // namespace bkf
