#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "mrverb/text.hpp"

namespace mrverb {

namespace lexdata {

// form lemma pairs for irregular verbs (past and participle forms, plus a few present forms).
inline constexpr std::string_view kIrregularForms = R"(
am be is be are be was be were be been be being be 's be 're be 'm be
has have had have having have 've have 'd have
does do did do done do doing do
goes go went go gone go
arose arise arisen arise awoke awake awoken awake
bore bear borne bear beat beat beaten beat became become began begin begun begin
bent bend bet bet bit bite bitten bite bled bleed blew blow blown blow broke break broken break
bred breed brought bring built build burnt burn burst burst bought buy caught catch
chose choose chosen choose clung cling came come cost cost crept creep cut cut dealt deal
dug dig dove dive drew draw drawn draw dreamt dream drank drink drunk drink drove drive driven drive
ate eat eaten eat fell fall fallen fall fed feed felt feel fought fight found find fled flee
flung fling flew fly flown fly forbade forbid forgot forget forgotten forget forgave forgive
forgiven forgive froze freeze frozen freeze got get gotten get gave give given give ground grind
grew grow grown grow hung hang heard hear hid hide hidden hide hit hit held hold hurt hurt
kept keep knelt kneel knew know known know laid lay led lead leapt leap learnt learn left leave
lent lend let let lay lie lain lie lit light lost lose made make meant mean met meet
mistook mistake mistaken mistake paid pay proved prove proven prove put put quit quit read read rode ride
ridden ride rang ring rung ring rose rise risen rise ran run sawed saw sawn saw said say saw see seen see
sought seek sold sell sent send set set sewn sew shook shake shaken shake shed shed shone shine shot shoot
showed show shown show shrank shrink shrunk shrink shut shut sang sing sung sing sank sink sunk sink
sat sit slept sleep slid slide slung sling slit slit smelt smell spoke speak spoken speak sped speed
spent spend spilt spill spun spin spat spit split split spread spread sprang spring sprung spring
stood stand stole steal stolen steal stuck stick stung sting stank stink struck strike strung string
strove strive swore swear sworn swear swept sweep swam swim swum swim swung swing took take taken take
taught teach tore tear torn tear told tell thought think threw throw thrown throw thrust thrust
trod tread understood understand undertook undertake upset upset woke wake woken wake wore wear worn wear
wove weave woven weave wept weep won win wound wind withdrew withdraw wrung wring wrote write written write
overcame overcome overtook overtake undid undo undone undo rebuilt rebuild sped speed slew slay
)";

// Verb lemmas known to the lemmatizer and the rule-based POS tagger.
inline constexpr std::string_view kKnownVerbs = R"(
accept add admire adore advise afford agree allow amble announce annoy answer appear apply approach argue
arrange arrest arrive ask assassinate attach attack attempt avoid awaken bake balance bang bathe battle beg
behave behead belong bend bet bind bite blame bleed bless blink blow boil bolt bomb borrow bounce bow box braise
brake branch breathe brighten bring brush bubble build bump burn bury buzz calculate call camp care carry carve
catch cause challenge change charge chase cheat check cheer chew chop choke choose chuckle clap clean clear climb
close coach collapse collect comb come command compare compete complain complete concentrate concern confess confuse
connect consider consist contain continue cook cool copy correct cost cough count cover crack cram crash crawl cross
crumple crush cry cure curl curve cut cycle dam damage dance dare darken decay deceive decide decorate delay delight
deliver demolish depart depend descend describe deserve destroy detect develop dice die disagree disappear discover
dim dislike dissolve dive divide doodle double doubt drag drain draw dream dress drift drill drink drip drive drop drown
drum dry dump dust earn eat educate electrocute embarrass emerge empty encourage end endanger enjoy enter entertain
envy escape evaporate examine excite excuse exercise exist exit expand expect explain explode extend extinguish extract
face fade fail fall fancy fasten fax fear feed feel fence fetch fight file fill film find finish fire fit fix flap
flash flatten flee fling float flood flow flower flutter fly fold follow fool force forget forgive form found freeze
frighten fry gain gallop gather gaze get giggle give glow glue go gobble grab grate grease greet grill grin grind grip
groan grow guarantee guard guess guide guillotine hammer hand handle hang happen harden harm hate haunt head heal heap
hear heat help hide hit hold hook hop hope hover hug hum hunt hurry hurt identify ignite ignore imagine impress improve
include increase influence inform inject injure instruct intend interest interfere interrupt introduce invent invite
irritate itch jail jam jog join joke judge juggle jump keep kick kill kiss kneel knit knock know label land last laugh
launch lay lead leak learn leave lengthen lend let lick lie lift light like limp list listen live load lock long look
loosen lose love lower make manage march mark marry match matter mate measure meet melt memorise mend milk mince mine
miss mix moan mop move muddle mug multiply mumble murder murmur mutter nail name need nest nibble nod note notice
number obey object observe obtain occur offend offer open order overflow owe own pack paddle paint park part pass pat
pause peck pedal peel peep perform permit perish phone pick pile pinch pine place plan plant play please plug point
poach poke polish pop possess post pound pour practise pray preach precede prefer prepare present preserve press
pretend prevent prick print produce program promise protect provide pull pump punch puncture punish push put question
queue race rain raise rake reach read realise receive recognise record redden reduce refuse regret reign reject
rejoice relax release rely remain remember remind remove repair repeat replace reply report reproduce request rescue
resemble retire return rhyme ride ring rinse rip rise risk roast rob rock roll rot row rub ruin rule run rush sack sail
satisfy saute sauté save saw say scare scatter scold scorch scrape scratch scrawl scream screw scribble scrub seal search
see seem sell send separate serve set settle sew shade shake shape share sharpen shatter shave shelter shine shiver
shock shoot shop shorten shout shovel show shrink shrug shut sigh sign signal sin sing sink sip sit skate sketch ski
skip slap sleep slice slide slip slither smash smear smell smile smoke smother snap snatch sneeze sniff snore snow soak
sob soften solve soothe sound spank spare spark sparkle speak spell spend spill spin spit splash split spoil sponge spot spray
spread sprinkle sprint sprout squash squeak squeal squeeze stab stack stagger stain stamp stand staple stare start
stay steal steer step stew stick stir stitch stop store strangle straighten stretch strike strip stroke stroll stuff
subtract succeed suck suffer suggest suit supply support suppose surprise surround suspect suspend swallow swear sweep
swim swing switch take talk tame tap taste tear tease telephone tell tempt terrify test thank thaw think throw
tickle tie tighten time tip tiptoe tire toss touch tour tow trace trade train transport trap travel treat tremble trick
trip trot trouble trust try tug tumble turn twist type understand undress unfasten unite unlock uncover unpack untidy
use vanish visit wail wait wake walk waltz wander want warm warn wash waste watch water wave weave weigh weep welcome
whip whirl whisper whistle widen wiggle win wink wipe wish wobble wonder work worry wrap wreck wrestle wriggle write
yawn yell zip zoom
)";

}  // namespace lexdata

/// Suffix-stripping lemmatizer for English verb forms with an irregular-verb table.
/// Candidate stems are checked against a set of known lemmas first; unknown words fall back to
/// orthographic rules.
class Lemmatizer {
public:
    Lemmatizer() {
        auto irregular = text::split_ws(lexdata::kIrregularForms);
        for (std::size_t i = 0; i + 1 < irregular.size(); i += 2)
            irregular_.emplace(std::string(irregular[i]), std::string(irregular[i + 1]));
        for (auto v : text::split_ws(lexdata::kKnownVerbs)) known_.emplace(v);
        for (const auto& [form, lemma] : irregular_) known_.insert(lemma);
    }

    static const Lemmatizer& shared() {
        static const Lemmatizer instance;
        return instance;
    }

    void add_known(std::string_view lemma) { known_.emplace(text::to_lower(lemma)); }

    bool is_known(std::string_view lemma) const { return known_.count(std::string(lemma)) > 0; }

    bool is_irregular_form(std::string_view form) const { return irregular_.count(text::to_lower(form)) > 0; }

    /// True when `form` lemmatizes to a known verb.
    bool is_known_verb_form(std::string_view form) const { return is_known(lemmatize(form)); }

    std::string lemmatize(std::string_view surface) const {
        std::string w = text::to_lower(surface);
        if (auto it = irregular_.find(w); it != irregular_.end()) return it->second;
        if (known_.count(w)) return w;

        if (text::ends_with(w, "ing") && w.size() > 4) {
            std::string stem = w.substr(0, w.size() - 3);
            if (has_vowel(stem)) return resolve(stem, /*allow_add_e=*/true);
        }
        if (text::ends_with(w, "ied") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
        if (text::ends_with(w, "ed") && w.size() > 3) {
            std::string stem = w.substr(0, w.size() - 2);
            // "sautéed", "agreed": the final e belongs to the stem.
            if (known_.count(w.substr(0, w.size() - 1))) return w.substr(0, w.size() - 1);
            return resolve(stem, /*allow_add_e=*/true);
        }
        if (text::ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
        if (text::ends_with(w, "s") && !text::ends_with(w, "ss") && w.size() > 2) {
            std::string stem = w.substr(0, w.size() - 1);
            if (known_.count(stem)) return stem;
            if (text::ends_with(w, "es")) {
                std::string es = w.substr(0, w.size() - 2);
                if (known_.count(es)) return es;
                if (text::ends_with(es, "sh") || text::ends_with(es, "ch") || text::ends_with(es, "x") ||
                    text::ends_with(es, "z") || text::ends_with(es, "ss") || text::ends_with(es, "o"))
                    return es;
            }
            return stem;
        }
        return w;
    }

private:
    static bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

    static bool has_vowel(std::string_view s) {
        for (char c : s)
            if (is_vowel(c) || c == 'y') return true;
        return false;
    }

    static std::size_t vowel_groups(std::string_view s) {
        std::size_t groups = 0;
        bool in_group = false;
        for (char c : s) {
            bool v = is_vowel(c);
            if (v && !in_group) ++groups;
            in_group = v;
        }
        return groups;
    }

    std::string resolve(const std::string& stem, bool allow_add_e) const {
        if (known_.count(stem)) return stem;
        if (known_.count(stem + "e")) return stem + "e";
        std::size_t n = stem.size();
        bool doubled = n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]);
        if (doubled) {
            std::string undoubled = stem.substr(0, n - 1);
            if (known_.count(undoubled)) return undoubled;
            char c = stem[n - 1];
            // fill, press, buzz keep their double consonant
            if (c != 'l' && c != 's' && c != 'z' && c != 'f') return undoubled;
            return stem;
        }
        if (!allow_add_e || n < 2) return stem;
        char last = stem[n - 1];
        char prev = stem[n - 2];
        if (last == 'v' || last == 'c' || text::ends_with(stem, "dg") || text::ends_with(stem, "rg") ||
            text::ends_with(stem, "ang") || text::ends_with(stem, "ung"))
            return stem + "e";
        if (last == 's' && is_vowel(prev) && n >= 3 && is_vowel(stem[n - 3])) return stem + "e";  // raised, caused
        bool cvc = !is_vowel(last) && last != 'w' && last != 'x' && last != 'y' && is_vowel(prev) &&
                   (n < 3 || !is_vowel(stem[n - 3]));
        if (cvc && vowel_groups(stem) == 1) return stem + "e";
        return stem;
    }

    std::unordered_map<std::string, std::string> irregular_;
    std::unordered_set<std::string> known_;
};

}  // namespace mrverb
