#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "ucrbm/errors.hpp"
#include "ucrbm/pauli.hpp"

namespace ucrbm {

// Text format: one term per line, "<coefficient> <word>". '#' starts a comment,
// blank lines are ignored, every word must have the same length.

namespace detail {

inline bool looks_complex(const std::string& tok) {
    if (tok.empty()) return false;
    const char last = tok.back();
    return tok.front() == '(' || last == 'j' || last == 'i' || last == 'J' || last == 'I';
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

}  // namespace detail

inline PauliHamiltonian parse_pauli_text(const std::string& text) {
    std::vector<PauliTerm> terms;
    std::size_t n_qubits = 0;
    std::size_t line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto tokens = detail::split_ws(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 2) throw ParseError(line_no, "expected '<coefficient> <word>'");
        const std::string& ctok = tokens[0];
        double coeff = 0.0;
        const char* first = ctok.data();
        if (ctok.size() > 1 && *first == '+') ++first;
        const char* last = ctok.data() + ctok.size();
        const auto res = std::from_chars(first, last, coeff);
        if (res.ec != std::errc() || res.ptr != last) {
            if (detail::looks_complex(ctok)) {
                throw HermiticityError("line " + std::to_string(line_no) +
                                       ": Pauli coefficients must be real, got '" + ctok + "'");
            }
            throw ParseError(line_no, "cannot parse coefficient '" + ctok + "'");
        }
        if (!std::isfinite(coeff)) throw ParseError(line_no, "coefficient must be finite");
        const std::string& word = tokens[1];
        for (char c : word) {
            if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') {
                throw ParseError(line_no, "invalid Pauli character in '" + word + "'");
            }
        }
        if (word.size() > kMaxQubits) throw ParseError(line_no, "Pauli word too long");
        if (n_qubits == 0) {
            n_qubits = word.size();
        } else if (word.size() != n_qubits) {
            throw ParseError(line_no, "word length differs from earlier lines");
        }
        for (const auto& t : terms) {
            if (t.word == word) throw ParseError(line_no, "duplicate Pauli word " + word);
        }
        terms.push_back({coeff, word});
    }
    if (terms.empty()) throw ParseError(line_no == 0 ? 1 : line_no, "no Pauli terms found");
    return PauliHamiltonian(n_qubits, std::move(terms));
}

inline PauliHamiltonian load_pauli_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open Pauli file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pauli_text(buf.str());
}

inline std::string format_pauli_text(const PauliHamiltonian& h) {
    std::string out;
    char buf[64];
    for (const auto& t : h.terms()) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.coefficient);
        out += buf;
        out += ' ';
        out += t.word;
        out += '\n';
    }
    return out;
}

inline void save_pauli_file(const PauliHamiltonian& h, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write Pauli file " + path);
    out << format_pauli_text(h);
}

}  // namespace ucrbm
