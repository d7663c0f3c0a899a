#include "bdia/trace_io.hpp"

#include <ostream>
#include <string>
#include <vector>

#include "bdia/analysis.hpp"

namespace bdia {

namespace {

void header_block(std::ostream& out, const char* name, std::size_t dim) {
  for (std::size_t k = 0; k < dim; ++k) out << ',' << name << k;
}

void value_block(std::ostream& out, const Vector& v, std::size_t dim) {
  for (std::size_t k = 0; k < dim; ++k) {
    out << ',' << (v.empty() ? std::string("nan") : format_double(v[k]));
  }
}

template <class Trace>
std::size_t trace_dim(const Trace& trace) {
  return trace.entries.empty() ? 0 : trace.entries.front().z.size();
}

}  // namespace

void write_trace_csv(std::ostream& out, const SolverTrace& trace) {
  const std::size_t dim = trace_dim(trace);
  out << "index,time";
  header_block(out, "z", dim);
  header_block(out, "delta_fwd", dim);
  header_block(out, "delta_bwd", dim);
  out << '\n';
  for (const auto& e : trace.entries) {
    out << e.index << ',' << format_double(e.time);
    value_block(out, e.z, dim);
    value_block(out, e.delta_fwd, dim);
    value_block(out, e.delta_bwd, dim);
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, const CoupledTrace& trace) {
  const std::size_t dim = trace_dim(trace);
  out << "index,time";
  header_block(out, "z", dim);
  header_block(out, "y", dim);
  header_block(out, "delta_fwd", dim);
  header_block(out, "delta_bwd", dim);
  out << '\n';
  for (const auto& e : trace.entries) {
    out << e.index << ',' << format_double(e.time);
    value_block(out, e.z, dim);
    value_block(out, e.y, dim);
    value_block(out, e.delta_fwd, dim);
    value_block(out, e.delta_bwd, dim);
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, const EdmTrace& trace) {
  const std::size_t dim = trace_dim(trace);
  out << "index,t";
  header_block(out, "z", dim);
  header_block(out, "z_hat", dim);
  header_block(out, "z_tilde", dim);
  header_block(out, "d", dim);
  header_block(out, "d_prime", dim);
  out << '\n';
  const Vector none;
  for (const auto& e : trace.entries) {
    out << e.index << ',' << format_double(e.time);
    value_block(out, e.z, dim);
    value_block(out, e.z_hat, dim);
    value_block(out, e.z_tilde, dim);
    value_block(out, e.d, dim);
    value_block(out, e.d_prime ? *e.d_prime : none, dim);
    out << '\n';
  }
}

}  // namespace bdia
