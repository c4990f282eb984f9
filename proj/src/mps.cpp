#include "gridtopo/mps.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace gridtopo::mip {

namespace {

constexpr std::size_t kNameWidth = 8;

std::string pad(const std::string& s, std::size_t w) {
    std::string out = s;
    if (out.size() < w) out.append(w - out.size(), ' ');
    return out;
}

std::string short_name(char prefix, int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c%07d", prefix, index + 1);
    return buf;
}

std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

} // namespace

void export_mps(const MipInstance& m, const std::string& path) {
    m.validate();

    bool rename = false;
    for (auto& v : m.vars())
        if (v.name.size() > kNameWidth) rename = true;
    for (auto& r : m.rows())
        if (r.name.size() > kNameWidth) rename = true;

    std::vector<std::string> cname(m.num_vars()), rname(m.num_rows());
    for (int j = 0; j < m.num_vars(); ++j)
        cname[j] = rename ? short_name('C', j) : m.var(j).name;
    for (int i = 0; i < m.num_rows(); ++i)
        rname[i] = rename ? short_name('R', i) : m.row(i).name;

    std::ofstream f(path);
    if (!f) throw ParseError(path, "cannot open for writing");
    f << "NAME          " << "GRIDTOPO\n";
    f << "ROWS\n";
    f << " N  " << pad("COST", kNameWidth) << "\n";
    for (int i = 0; i < m.num_rows(); ++i) {
        char s = m.row(i).sense == Sense::LessEqual      ? 'L'
                 : m.row(i).sense == Sense::GreaterEqual ? 'G'
                                                         : 'E';
        f << " " << s << "  " << pad(rname[i], kNameWidth) << "\n";
    }

    // column-major entries
    std::vector<std::vector<std::pair<int, double>>> bycol(m.num_vars());
    for (int i = 0; i < m.num_rows(); ++i)
        for (auto& [j, a] : m.row(i).coef)
            if (a != 0.0) bycol[j].push_back({i, a});

    f << "COLUMNS\n";
    bool in_int = false;
    int marker = 0;
    auto set_marker = [&](bool want) {
        if (want == in_int) return;
        f << "    " << pad("MARKER" + std::to_string(marker++), kNameWidth)
          << "  " << pad("'MARKER'", 10) << "               "
          << (want ? "'INTORG'" : "'INTEND'") << "\n";
        in_int = want;
    };
    for (int j = 0; j < m.num_vars(); ++j) {
        set_marker(m.var(j).kind == VarKind::Binary);
        std::vector<std::pair<std::string, double>> entries;
        if (m.var(j).obj != 0.0) entries.push_back({"COST", m.var(j).obj});
        for (auto& [i, a] : bycol[j]) entries.push_back({rname[i], a});
        if (entries.empty()) entries.push_back({"COST", 0.0}); // keep the column declared
        for (std::size_t k = 0; k < entries.size(); k += 2) {
            f << "    " << pad(cname[j], kNameWidth) << "  "
              << pad(entries[k].first, kNameWidth) << "  "
              << format_double(entries[k].second);
            if (k + 1 < entries.size())
                f << "   " << pad(entries[k + 1].first, kNameWidth) << "  "
                  << format_double(entries[k + 1].second);
            f << "\n";
        }
    }
    set_marker(false);

    f << "RHS\n";
    if (m.obj_constant() != 0.0)
        f << "    " << pad("RHS", kNameWidth) << "  " << pad("COST", kNameWidth) << "  "
          << format_double(-m.obj_constant()) << "\n";
    for (int i = 0; i < m.num_rows(); ++i) {
        if (m.row(i).rhs != 0.0)
            f << "    " << pad("RHS", kNameWidth) << "  " << pad(rname[i], kNameWidth)
              << "  " << format_double(m.row(i).rhs) << "\n";
    }
    f << "RANGES\n";
    f << "BOUNDS\n";
    for (int j = 0; j < m.num_vars(); ++j) {
        const auto& v = m.var(j);
        const std::string& n = cname[j];
        auto bnd = [&](const char* key, double val, bool with_val = true) {
            f << " " << key << " " << pad("BND", kNameWidth) << "  " << pad(n, kNameWidth);
            if (with_val) f << "  " << format_double(val);
            f << "\n";
        };
        if (v.kind == VarKind::Binary) {
            if (v.lo == 0.0 && v.up == 1.0) bnd("BV", 0.0, false);
            else if (v.lo == v.up) bnd("FX", v.lo);
            else { bnd("LO", v.lo); bnd("UP", v.up); }
            continue;
        }
        if (v.lo == v.up) { bnd("FX", v.lo); continue; }
        if (std::isinf(v.lo) && std::isinf(v.up)) { bnd("FR", 0.0, false); continue; }
        if (std::isinf(v.lo)) bnd("MI", 0.0, false);
        else if (v.lo != 0.0) bnd("LO", v.lo);
        if (!std::isinf(v.up)) bnd("UP", v.up);
    }
    f << "ENDATA\n";
    f.close();

    if (rename) {
        std::ofstream map(path + ".names");
        if (!map) throw ParseError(path + ".names", "cannot open for writing");
        for (int i = 0; i < m.num_rows(); ++i)
            map << "row " << rname[i] << " " << m.row(i).name << "\n";
        for (int j = 0; j < m.num_vars(); ++j)
            map << "col " << cname[j] << " " << m.var(j).name << "\n";
    }
}

MipInstance import_mps(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path, "cannot open");
    MipInstance m;
    enum Section { None, Rows, Columns, Rhs, Ranges, Bounds, Done } sec = None;
    std::string line;
    std::string obj_row;
    struct RowInfo {
        Sense sense;
        int index = -1; // -1 for the objective row
    };
    std::map<std::string, RowInfo> rowinfo;
    std::map<std::string, std::vector<std::pair<int, double>>> rowcoef;
    std::map<std::string, double> rowrhs;
    std::map<std::string, double> rowrange;
    bool in_int = false;
    std::map<std::string, int> colidx;
    struct ColBound {
        double lo = 0.0, up = kInf;
        bool lo_set = false, up_set = false, fixed = false, free_set = false, bv = false;
    };
    std::map<std::string, ColBound> cb;
    std::vector<std::string> colorder;
    std::map<std::string, VarKind> colkind;
    std::map<std::string, double> colobj;
    int lineno = 0;

    auto where = [&]() { return path + ":" + std::to_string(lineno); };

    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '*') continue;
        if (line[0] != ' ' && line[0] != '\t') {
            auto t = tokens(line);
            if (t.empty()) continue;
            if (t[0] == "NAME") sec = None;
            else if (t[0] == "ROWS") sec = Rows;
            else if (t[0] == "COLUMNS") sec = Columns;
            else if (t[0] == "RHS") sec = Rhs;
            else if (t[0] == "RANGES") sec = Ranges;
            else if (t[0] == "BOUNDS") sec = Bounds;
            else if (t[0] == "ENDATA") { sec = Done; break; }
            else throw ParseError(where(), "unknown section " + t[0]);
            continue;
        }
        auto t = tokens(line);
        if (t.empty()) continue;
        switch (sec) {
            case Rows: {
                if (t.size() != 2) throw ParseError(where(), "bad ROWS line");
                if (t[0] == "N") {
                    if (obj_row.empty()) obj_row = t[1];
                } else if (t[0] == "L" || t[0] == "G" || t[0] == "E") {
                    Sense s = t[0] == "L"   ? Sense::LessEqual
                              : t[0] == "G" ? Sense::GreaterEqual
                                            : Sense::Equal;
                    rowinfo[t[1]] = RowInfo{s, 0};
                    rowcoef[t[1]] = {};
                } else {
                    throw ParseError(where(), "bad row sense " + t[0]);
                }
                break;
            }
            case Columns: {
                if (t.size() >= 3 && t[1] == "'MARKER'") {
                    in_int = t[2] == "'INTORG'";
                    break;
                }
                if (t.size() >= 2 && t.back() == "'INTORG'") { in_int = true; break; }
                if (t.size() >= 2 && t.back() == "'INTEND'") { in_int = false; break; }
                if (t.size() < 3 || (t.size() - 1) % 2 != 0)
                    throw ParseError(where(), "bad COLUMNS line");
                const std::string& col = t[0];
                if (!colidx.count(col)) {
                    colidx[col] = static_cast<int>(colorder.size());
                    colorder.push_back(col);
                    colkind[col] = in_int ? VarKind::Binary : VarKind::Continuous;
                    colobj[col] = 0.0;
                }
                for (std::size_t k = 1; k + 2 <= t.size(); k += 2) {
                    const std::string& row = t[k];
                    double val = std::strtod(t[k + 1].c_str(), nullptr);
                    if (row == obj_row) colobj[col] += val;
                    else if (rowcoef.count(row))
                        rowcoef[row].push_back({colidx[col], val});
                    else throw ParseError(where(), "unknown row " + row);
                }
                break;
            }
            case Rhs: {
                if (t.size() < 3) throw ParseError(where(), "bad RHS line");
                for (std::size_t k = 1; k + 2 <= t.size(); k += 2) {
                    double val = std::strtod(t[k + 1].c_str(), nullptr);
                    if (t[k] == obj_row) m.add_obj_constant(-val);
                    else rowrhs[t[k]] = val;
                }
                break;
            }
            case Ranges: {
                if (t.size() < 3) throw ParseError(where(), "bad RANGES line");
                for (std::size_t k = 1; k + 2 <= t.size(); k += 2)
                    rowrange[t[k]] = std::strtod(t[k + 1].c_str(), nullptr);
                break;
            }
            case Bounds: {
                if (t.size() < 3) throw ParseError(where(), "bad BOUNDS line");
                const std::string& key = t[0];
                const std::string& col = t[2];
                if (!colidx.count(col)) throw ParseError(where(), "unknown column " + col);
                double val = t.size() > 3 ? std::strtod(t[3].c_str(), nullptr) : 0.0;
                auto& b = cb[col];
                if (key == "UP") { b.up = val; b.up_set = true; }
                else if (key == "LO") { b.lo = val; b.lo_set = true; }
                else if (key == "FX") { b.lo = b.up = val; b.fixed = true; }
                else if (key == "FR") { b.free_set = true; }
                else if (key == "MI") { b.lo = -kInf; b.lo_set = true; }
                else if (key == "PL") { b.up = kInf; b.up_set = true; }
                else if (key == "BV") { b.bv = true; }
                else throw ParseError(where(), "unknown bound key " + key);
                break;
            }
            default:
                break;
        }
    }
    if (sec != Done) throw ParseError(path, "missing ENDATA");

    for (auto& col : colorder) {
        ColBound b = cb.count(col) ? cb[col] : ColBound{};
        double lo = 0.0, up = kInf;
        VarKind kind = colkind[col];
        if (kind == VarKind::Binary) { lo = 0.0; up = 1.0; }
        if (b.free_set) { lo = -kInf; up = kInf; }
        if (b.lo_set || b.fixed) lo = b.lo;
        if (b.up_set || b.fixed) up = b.up;
        if (b.bv) { lo = 0.0; up = 1.0; kind = VarKind::Binary; }
        m.add_var(col, lo, up, kind, colobj[col]);
    }
    // rows in file order: reconstruct by re-reading ROWS order from rowinfo is
    // unordered; keep a second pass over the original file order instead.
    std::ifstream f2(path);
    std::string l2;
    bool inrows = false;
    std::vector<std::string> roworder;
    while (std::getline(f2, l2)) {
        if (l2.empty() || l2[0] == '*') continue;
        if (l2[0] != ' ' && l2[0] != '\t') {
            inrows = tokens(l2)[0] == "ROWS";
            continue;
        }
        if (!inrows) continue;
        auto t = tokens(l2);
        if (t.size() == 2 && t[0] != "N") roworder.push_back(t[1]);
    }
    for (auto& rn : roworder) {
        auto info = rowinfo[rn];
        double rhs = rowrhs.count(rn) ? rowrhs[rn] : 0.0;
        if (rowrange.count(rn)) {
            double r = rowrange[rn];
            double lo, up;
            switch (info.sense) {
                case Sense::LessEqual: lo = rhs - std::abs(r); up = rhs; break;
                case Sense::GreaterEqual: lo = rhs; up = rhs + std::abs(r); break;
                default: lo = r > 0 ? rhs : rhs + r; up = r > 0 ? rhs + r : rhs; break;
            }
            m.add_row(rn + "_lo", Sense::GreaterEqual, lo, rowcoef[rn]);
            m.add_row(rn + "_up", Sense::LessEqual, up, rowcoef[rn]);
        } else {
            m.add_row(rn, info.sense, rhs, rowcoef[rn]);
        }
    }
    m.validate();
    return m;
}

} // namespace gridtopo::mip
