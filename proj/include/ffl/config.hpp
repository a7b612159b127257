#pragma once

#include <map>
#include <string>
#include <vector>

namespace ffl {

struct RunConfig {
    struct {
        std::string name = "quartic";
        std::map<std::string, double> params;  // e.g. eps, a, b
    } norm;
    struct {
        int nx = 64;
        int ntheta = 64;
    } grid;
    struct {
        double T = 1.0;
        double dt = 0.0;  // 0 => auto from dt_max at t = 0
        int snap_every = 10;
    } time;
    struct {
        std::string u0 = "cos_x1_cos_x2";
        double amplitude = 0.5;
    } heat;
    struct {
        double delta_grad = 1e-7;
        double s_gate = 1e-4;
    } tolerances;
    struct {
        double theta = 2.0;
        double eps = 1.0;
    } harnack;
    std::string output_dir = "out";
    unsigned seed = 0;

    void validate() const;  // throws ConfigError
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& cfg);  // JSON, embedded in outputs

}  // namespace ffl
