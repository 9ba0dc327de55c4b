#include "dsaw/bitset.hpp"

#include "dsaw/error.hpp"

namespace dsaw {

BitSet BitSet::from_string(std::string_view bits) {
    BitSet b(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1')
            b.set(i);
        else if (bits[i] != '0')
            throw DataError("invalid bit character '" + std::string(1, bits[i]) + "'");
    }
    return b;
}

std::vector<std::size_t> BitSet::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        Word word = words_[w];
        while (word) {
            out.push_back(w * kWordBits + static_cast<std::size_t>(std::countr_zero(word)));
            word &= word - 1;
        }
    }
    return out;
}

std::string BitSet::to_string() const {
    std::string s(nbits_, '0');
    for (std::size_t i = 0; i < nbits_; ++i)
        if (test(i)) s[i] = '1';
    return s;
}

}  // namespace dsaw
