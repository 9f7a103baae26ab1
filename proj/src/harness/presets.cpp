#include <array>
#include <utility>

#include "mgthmm/harness.hpp"

namespace mgthmm {

namespace {

constexpr const char* kDeskFig1 = R"(problem = linear_drift
method = hmm
eps = 0.05
T = 25
dt = 1e-3
layer = false
max_order = 2
output = fig1_drift.csv

[experiment]
method = reference
[experiment]
k = 0
[experiment]
k = 1
[experiment]
k = 2
)";

constexpr const char* kDeskFig2 = R"(problem = chua
eps = 0.02
T = 10
dt = 0.02
dt_coupled = 1e-4
P = 5
m = 3
eta = 1e-4
checkpoints = 1, 2, 3, 4, 5, 6, 7, 8, 9, 10
output = fig2_chua.csv

[experiment]
method = hmm
k = 0
[experiment]
method = twogrid
k = 0
[experiment]
method = hmm
k = 1
[experiment]
method = twogrid
k = 1
[experiment]
method = hmm
k = 2
[experiment]
method = twogrid
k = 2
)";

constexpr const char* kRotationBody = R"(problem = linear_rotation
method = twogrid
T_scaling = inverse_eps
eps = 2^-4, 2^-5, 2^-6, 2^-7
dt_coupled = 1e-4
P = 4
m = 3
output = fig3_rotation.csv

[experiment]
k = 0
[experiment]
k = 1
[experiment]
k = 2
)";

constexpr const char* kLorenzBody = R"(problem = lorenz96
dt = 1e-3
dt_coupled = 1e-4
P = 4
m = 3
eta = 1e-6
eps = 2^-4, 2^-5, 2^-6
output = fig4_lorenz.csv

[experiment]
method = twogrid
k = 0
[experiment]
method = mgt
k = 0
L = 2
)";

constexpr const char* kRobertsonBody = R"(problem = robertson
method = twogrid
eps = 2^-5, 2^-6, 2^-7, 2^-8
dt = 1e-3
dt_coupled = 1e-4
P = 4
m = 3
eta = 1e-5
output = fig5_robertson.csv

[experiment]
k = 0
[experiment]
k = 1
)";

constexpr const char* kEnzymeBody = R"(problem = enzyme
T = 20
eps = 2^-5, 2^-6, 2^-7, 2^-8
dt = 1e-3
dt_coupled = 1e-4
P = 4
m = 3
eta = 5e-6
output = fig6_enzyme.csv

[experiment]
method = twogrid
k = 0
[experiment]
method = twogrid
k = 1
[experiment]
method = mgt
k = 0
L = 2
[experiment]
method = twogrid
k = 0
strategy = manifold
)";

std::array<std::pair<const char*, std::string>, 12> table() {
    const std::string rot(kRotationBody);
    const std::string lor(kLorenzBody);
    const std::string rob(kRobertsonBody);
    return {{
        {"paper-fig1", kDeskFig1},
        {"desk-fig1", kDeskFig1},
        {"paper-fig2", kDeskFig2},
        {"desk-fig2", kDeskFig2},
        {"paper-fig3", "dt = 1e-3\n" + rot},
        {"desk-fig3", "dt = 1e-2\n" + rot},
        {"paper-fig4", "T = 100\n" + lor},
        {"desk-fig4", "T = 20\n" + lor},
        {"paper-fig5", "T = 500\n" + rob},
        {"desk-fig5", "T = 50\n" + rob},
        {"paper-fig6", kEnzymeBody},
        {"desk-fig6", kEnzymeBody},
    }};
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [name, text] : table()) out.emplace_back(name);
    return out;
}

std::string preset_text(std::string_view name) {
    for (const auto& [key, text] : table()) {
        if (name == key) return text;
    }
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace mgthmm
