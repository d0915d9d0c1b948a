#pragma once

// Built-in datasets, mirroring the CSV files under data/.

#include <string>
#include <vector>

#include "hiercheck/dataset.hpp"
#include "hiercheck/errors.hpp"

namespace hiercheck::datasets {

inline GroupedDataset example1() { return GroupedDataset::from_means({1.56, 0.64, 1.98, 0.01, 6.96}, 8, 4.0); }
inline GroupedDataset example2() { return GroupedDataset::from_means({0.75, 0.77, 5.77, 1.86, 0.75}, 8, 4.0); }

inline GroupedDataset example3() {
    return GroupedDataset::from_means({-2.18, -1.47, -0.87, -0.38, 0.05, 0.29, 0.96, 2.74}, 12, 4.0);
}
inline GroupedDataset example4() {
    return GroupedDataset::from_means({-0.05, 0.66, 1.37, 1.70, 1.72, 2.14, 2.73, 3.68}, 12, 4.0);
}
inline GroupedDataset example5() {
    return GroupedDataset::from_means({1.53, 1.65, 1.71, 1.75, 1.87, 2.16, 2.47, 3.68}, 12, 4.0);
}
inline GroupedDataset example6() {
    return GroupedDataset::from_means({0.50, 1.52, 1.59, 2.73, 2.88, 3.54, 4.21, 5.86}, 12, 4.0);
}

// 5 x 6 raw observations, sigma^2 unknown.
inline GroupedDataset groups5x6() {
    return GroupedDataset::from_observations({{2.73, 0.56, 0.87, 0.90, 2.27, 0.82},
                                              {1.60, 2.17, 1.78, 1.84, 1.83, 0.80},
                                              {1.62, 0.19, 4.10, 0.65, 1.98, 0.86},
                                              {0.96, 1.92, 0.96, 1.83, 0.94, 1.42},
                                              {6.32, 3.66, 4.51, 3.29, 5.61, 3.27}});
}

inline std::vector<std::string> names() {
    return {"example1", "example2", "example3", "example4", "example5", "example6", "groups5x6"};
}

inline bool exists(const std::string& name) {
    for (const auto& n : names())
        if (n == name) return true;
    return false;
}

inline GroupedDataset by_name(const std::string& name) {
    if (name == "example1") return example1();
    if (name == "example2") return example2();
    if (name == "example3") return example3();
    if (name == "example4") return example4();
    if (name == "example5") return example5();
    if (name == "example6") return example6();
    if (name == "groups5x6") return groups5x6();
    throw data_error("unknown built-in dataset '" + name + "'");
}

// A built-in name, or else a CSV path.
inline GroupedDataset load(const std::string& name_or_path) {
    return exists(name_or_path) ? by_name(name_or_path) : read_grouped_csv(name_or_path);
}

}  // namespace hiercheck::datasets
