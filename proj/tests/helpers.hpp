// helpers.hpp — shared model fixtures for the test suite

#pragma once

#include "negf/context.hpp"
#include "negf/model.hpp"

namespace testing_util {

using namespace negf;

// One sample site (energy 0) coupled to a one-site lead.
inline ModelSpec tiny11(double d = 1.0, double lead_energy = 0.0, double beta = 1.0,
                        double mu = 0.0, double xi = 0.0) {
    ModelSpec spec;
    spec.sample_sites = {"s0"};
    spec.h_sample = MatrixXcd::Zero(1, 1);
    spec.w = MatrixXd::Zero(1, 1);
    spec.xi = xi;
    LeadSpec lead = LeadSpec::chain("L", 1, 0.0, lead_energy, d, beta, mu);
    lead.phi = VectorXcd::Zero(1);
    lead.phi(0) = 1.0;
    spec.leads.push_back(lead);
    return spec;
}

// Two-site sample (hopping 1) with two chain leads of the given length,
// d = 0.7, beta = (1, 2), mu = (0.4, -0.4), w(0,1) = 1.
inline ModelSpec dimer_two_leads(int lead_sites, double xi) {
    ModelSpec spec;
    spec.sample_sites = {"s0", "s1"};
    spec.h_sample = MatrixXcd::Zero(2, 2);
    spec.h_sample(0, 1) = 1.0;
    spec.h_sample(1, 0) = 1.0;
    spec.w = MatrixXd::Zero(2, 2);
    spec.w(0, 1) = 1.0;
    spec.w(1, 0) = 1.0;
    spec.xi = xi;
    LeadSpec left = LeadSpec::chain("left", lead_sites, 1.0, 0.0, 0.7, 1.0, 0.4);
    left.phi = VectorXcd::Zero(2);
    left.phi(0) = 1.0;
    LeadSpec right = LeadSpec::chain("right", lead_sites, 1.0, 0.0, 0.7, 2.0, -0.4);
    right.phi = VectorXcd::Zero(2);
    right.phi(1) = 1.0;
    spec.leads.push_back(left);
    spec.leads.push_back(right);
    return spec;
}

// The reference acceptance instance: three-site leads.
inline ModelSpec reference_instance(double xi = 0.5) { return dimer_two_leads(3, xi); }

}  // namespace testing_util
