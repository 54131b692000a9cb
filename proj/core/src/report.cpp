#include "rpcl/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rpcl {

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_curve(const Curve& curve, const std::string& header, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_report: cannot open " + path);
    f << header << '\n';
    for (const auto& [x, y] : curve.points) f << fmt_real(x) << ',' << fmt_real(y) << '\n';
    if (!f) throw std::runtime_error("write_report: write failure on " + path);
}

}  // namespace

void write_report(const EvalReport& report, const std::vector<std::string>& config_echo,
                  const std::string& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::ordered_json j;
    for (const auto& [name, value] : report.scalars) j[name] = value;
    {
        std::ofstream f(dir + "/metrics.json");
        if (!f) throw std::runtime_error("write_report: cannot open " + dir + "/metrics.json");
        f << j.dump(2) << '\n';
    }
    for (const auto& [name, curve] : report.curves) {
        std::string header = name == "cmc" ? "k,rate" : "fpr,tpr";
        write_curve(curve, header, dir + "/" + name + ".csv");
    }
    {
        std::ofstream f(dir + "/config.echo");
        if (!f) throw std::runtime_error("write_report: cannot open " + dir + "/config.echo");
        for (const std::string& line : config_echo) f << line << '\n';
    }
}

}  // namespace rpcl
