#ifndef GEOPAS_BBOB_HPP
#define GEOPAS_BBOB_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace geopas::bbob {

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    static Bounds symmetric(int dimension, double half_width = 5.0);
};

// One seeded instance of a scalable test function.  The transform is a
// deterministic approximation of the COCO instance machinery: the optimum
// shift is drawn uniformly from the inner 80% of the box, the rotation is a
// Haar draw (identity for the separable group f1-f5), and the objective
// offset is uniform in [-100, 100].  All fields derive from
// (function_id, dimension, instance_id) alone.
struct ProblemInstance {
    int function_id = 1;
    int dimension = 2;
    int instance_id = 1;
    std::vector<double> shift;              // location of the optimum
    std::vector<double> rotation;           // d x d, row-major, orthogonal
    double f_opt = 0.0;
    Bounds bounds;

    double evaluate(const std::vector<double>& point) const;
};

inline constexpr int kFunctionCount = 24;

// f1-f5 carry an identity rotation
bool is_separable(int function_id);

const char* function_name(int function_id);

ProblemInstance make_instance(int function_id, int dimension, int instance_id);

// affine map from the unit cube to the physical box; 0.5 -> box centre
std::vector<double> to_physical(const std::vector<double>& unit_point, const Bounds& bounds);

// standard BBOB function-group partition, "f1-f5" .. "f20-f24"
int function_group(int function_id);
const char* group_label(int group_index);
inline constexpr int kGroupCount = 5;

}  // namespace geopas::bbob

#endif
