// Solve one benchmark instance with CRM and P-CRM and print the records.

#include "pcrm/pcrm.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv)
{
    const pcrm::Index m = argc > 1 ? std::atol(argv[1]) : 5000;
    const pcrm::Index n = argc > 2 ? std::atol(argv[2]) : 500;
    const double c      = argc > 3 ? std::atof(argv[3]) : 0.0;

    const auto inst = pcrm::build_instance(m, n, c, 1);
    std::cout << pcrm::bench_csv_header << '\n';
    for (auto method : {pcrm::Method::crm, pcrm::Method::pcrm}) {
        pcrm::SolverConfig config;
        config.method           = method;
        config.workers          = pcrm::max_workers();
        config.record_residuals = false;
        const auto result       = pcrm::solve(inst, config);
        std::cout << pcrm::to_csv_row(pcrm::make_record(inst, config, result.trace)) << '\n';
    }
}
