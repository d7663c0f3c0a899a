#pragma once

#include <iosfwd>

#include "bdia/ddim.hpp"
#include "bdia/edict.hpp"
#include "bdia/edm.hpp"

namespace bdia {

// index,time,z0..,delta_fwd0..,delta_bwd0..  (missing values written as nan)
void write_trace_csv(std::ostream& out, const SolverTrace& trace);

// index,time,z0..,y0..,delta_fwd0..,delta_bwd0..
void write_trace_csv(std::ostream& out, const CoupledTrace& trace);

// index,t,z0..,z_hat0..,z_tilde0..,d0..,d_prime0..
void write_trace_csv(std::ostream& out, const EdmTrace& trace);

}  // namespace bdia
