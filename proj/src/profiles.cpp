#include "bdst/generator.hpp"

namespace bdst {
inline namespace BDST_ABI_NAMESPACE {

namespace {

SlotTemplates date_templates() {
  return {
      {"for {v}", "i want to go {v}", "{v} please", "{v} works for me", "make it {v}",
       "can we do {v}", "i am free {v}"},
      {"what day would you like to go?", "which date works for you?", "when do you want to go?"},
      {"is {v} okay?", "i have availability {v}. does that work?", "would {v} be good?"},
      {"any day is fine", "the date does not matter", "i am flexible on the day"},
      {"actually, can we move it to {v}?", "sorry, make the date {v} instead"},
  };
}

SlotTemplates time_templates(std::string_view noun) {
  const std::string n(noun);
  return {
      {"at {v}", "around {v}", "{v} please", "the {v} " + n + " sounds good",
       "i would like the {v} " + n, "{v} is best for me", "how about {v}"},
      {"what time do you prefer?", "which time would you like?", "what time works for you?"},
      {"there is a " + n + " at {v}. okay?", "would {v} work?", "i can do {v}. is that alright?"},
      {"any time works", "i do not care about the time", "the time is up to you"},
      {"actually, change the time to {v}", "wait, i would rather go at {v}"},
  };
}

void add_common(GeneratorProfile& p) {
  p.confirmations = {"yes", "sure", "that works", "sounds good", "yes please", "perfect"};
  p.rejections = {"no, {v} instead", "no, i would prefer {v}", "not that one. {v} please",
                  "no thanks, i want {v}"};
  p.connectors = {" and ", ", and ", ". also, ", ", "};
  p.user_closings = {"thank you", "thanks", "great, thanks a lot", "that is all, bye"};
  p.anything_else = {"anything else?", "is there anything else i can do?", "what else can i do for you?"};
}

GeneratorProfile sim_m_like() {
  GeneratorProfile p;
  p.name = "sim-m-like";
  p.slots = {"date", "time", "num_tickets", "theatre_name", "movie"};
  p.oov_slots = {"movie"};
  p.lexicons["date"].train = {"today", "tomorrow", "tonight", "friday", "saturday", "sunday",
                              "monday", "tuesday", "wednesday", "thursday", "next friday",
                              "next saturday", "this weekend", "next week"};
  p.lexicons["time"].train = {"7 pm", "7:30 pm", "8 pm", "6 pm", "9 pm", "noon", "5:15 pm",
                              "10 am", "11 am", "4 pm", "6:45 pm", "9:30 pm", "8:15 pm", "midnight"};
  p.lexicons["num_tickets"].train = {"one", "two", "three", "four", "five", "six",
                                     "2", "3", "4", "5", "6", "8"};
  p.lexicons["theatre_name"].train = {
      "Regal Cinema", "AMC Mercado", "Century 16", "Cinemark Redwood", "Shattuck Cinemas",
      "Camera 7", "Lumiere Theatre", "Roxie Theater", "Alamo Drafthouse", "Castro Theatre",
      "Balboa Theatre", "Landmark Opera Plaza", "Stanford Theatre", "Aquarius Theatre",
      "Century 20 Great Mall", "Cinelux Plaza"};
  p.lexicons["movie"].train = {
      "Inception", "The Dark Knight", "Zootopia", "Arrival", "Gravity", "Interstellar",
      "Moonlight", "The Revenant", "Whiplash", "Frozen", "Deadpool", "Logan", "Coco",
      "Dunkirk", "Sing", "Split", "Get Out", "La La Land", "Big Hero 6", "Inside Out",
      "The Martian", "Room", "Spotlight", "Birdman", "Boyhood", "Her", "Up", "Wall-E",
      "Avatar", "Titanic", "Jaws", "Rocky", "Alien", "Heat", "Psycho", "Fargo", "Casablanca",
      "Vertigo", "Amelie", "Memento"};
  p.lexicons["movie"].oov = {
      "Zodiac", "Sicario", "Hereditary", "Parasite", "Joker", "Tenet", "Minari", "Soul",
      "Nomadland", "Dune", "Encanto", "Belfast", "Elvis", "Nope", "Barbarian", "Tar",
      "Oppenheimer", "Barbie", "Wonka", "Napoleon", "Maestro", "Saltburn", "Anora", "Wicked",
      "Conclave", "Gladiator II", "The Substance", "Civil War", "Challengers", "Furiosa"};

  p.templates["date"] = date_templates();
  p.templates["time"] = time_templates("showing");
  p.templates["num_tickets"] = {
      {"{v} tickets", "i need {v} tickets", "for {v} people", "get {v} seats",
       "we are a group of {v}", "book {v} tickets please"},
      {"how many tickets do you need?", "how many people are going?", "for how many people?"},
      {"shall i book {v} tickets?", "is it {v} tickets?"},
      {},
      {"actually, make it {v} tickets", "we are {v} people now"},
  };
  p.templates["theatre_name"] = {
      {"i prefer {v}", "let us go to {v}", "{v} would be great", "book it at {v}",
       "the theatre should be {v}", "somewhere like {v}"},
      {"which theatre do you prefer?", "where would you like to watch it?",
       "do you have a theatre in mind?"},
      {"i found seats at {v}. is that okay?", "{v} has showings. sound good?",
       "would you like {v}?"},
      {"any theatre works", "i do not care about the theatre", "whichever theatre is fine"},
      {"actually, switch the theatre to {v}"},
  };
  p.templates["movie"] = {
      {"i want to see {v}", "get me tickets for {v}", "i would like to watch {v}",
       "can i book {v}", "i am interested in {v}", "{v} please", "let us see {v}",
       "tickets for {v}"},
      {"which movie would you like to see?", "what movie are you interested in?",
       "what film do you want to watch?"},
      {"would you like to see {v}?", "{v} is playing. does that work?", "how about {v}?"},
      {"any movie is fine", "i do not mind which movie", "surprise me with the movie"},
      {"actually, i would rather see {v}", "change the movie to {v}"},
  };

  add_common(p);
  p.greetings = {"hi, i want to buy movie tickets", "hello, can you help me book a movie?",
                 "i would like to see a movie", "hey, i need movie tickets"};
  p.system_closings = {"your tickets are booked.", "all set, enjoy the movie!",
                       "i have confirmed your booking."};
  p.min_goal_slots = 2;
  p.max_goal_slots = 5;
  p.train_dialogues = 384;
  p.dev_dialogues = 120;
  p.test_dialogues = 264;
  return p;
}

GeneratorProfile sim_r_like() {
  GeneratorProfile p;
  p.name = "sim-r-like";
  p.slots = {"date", "time", "category", "price_range", "rating", "num_people", "location",
             "meal", "restaurant_name"};
  p.oov_slots = {"restaurant_name"};
  p.lexicons["date"].train = {"today", "tomorrow", "tonight", "friday", "saturday", "sunday",
                              "monday", "tuesday", "wednesday", "thursday", "next friday",
                              "this weekend"};
  p.lexicons["time"].train = {"7 pm", "7:30 pm", "8 pm", "6 pm", "noon", "1 pm", "12:30 pm",
                              "9 am", "10:30 am", "6:15 pm", "8:45 pm", "11 am"};
  p.lexicons["category"].train = {"italian", "chinese", "mexican", "thai", "indian", "japanese",
                                  "french", "korean", "vietnamese", "greek", "ethiopian",
                                  "american", "sushi", "pizza"};
  p.lexicons["price_range"].train = {"cheap", "moderately priced", "expensive", "inexpensive",
                                     "affordable", "upscale"};
  p.lexicons["rating"].train = {"4 star", "5 star", "3 star", "top rated", "well reviewed",
                                "highly rated"};
  p.lexicons["num_people"].train = {"two", "three", "four", "five", "six", "2", "3", "4", "5",
                                    "6", "8", "ten"};
  p.lexicons["location"].train = {"downtown", "mountain view", "palo alto", "san jose",
                                  "sunnyvale", "berkeley", "oakland", "midtown", "the mission",
                                  "cupertino", "menlo park", "fremont"};
  p.lexicons["meal"].train = {"breakfast", "brunch", "lunch", "dinner"};
  p.lexicons["restaurant_name"].train = {
      "Olive Garden", "Chez Panisse", "Sushi Ran", "Golden Dragon", "Taqueria Cancun",
      "Nopa", "Zuni Cafe", "Slanted Door", "Tartine", "House of Prime Rib", "Kokkari",
      "Delfina", "Flour and Water", "Burma Superstar", "Mama Ji", "Cotogna", "Foreign Cinema",
      "Hog Island", "Swan Oyster Depot", "Liholiho", "State Bird", "Lazy Bear", "Rich Table",
      "Mister Jius", "Nopalito", "Souvla", "Pizzeria Delfina", "Bix", "Quince", "Benu",
      "Boulevard", "Perbacco", "Zazie", "Kin Khao", "Aziza", "Ippudo", "Tadich Grill",
      "Anchor Oyster", "Farmhouse Kitchen", "Little Star"};
  p.lexicons["restaurant_name"].oov = {
      "Osteria Mozza", "Bestia", "Republique", "Sqirl", "Gjelina", "Providence", "Kismet",
      "Petit Trois", "Majordomo", "Howlin Rays", "Guelaguetza", "Spago", "Felix", "Jitlada",
      "Langers", "Bavel", "Otium", "Musso", "Gwen", "Horses", "Anajak", "Kato", "Dialogue Cafe",
      "Pine and Crane", "Yangban", "Sushi Gen", "Night Market", "Cassia", "Hayato", "Holbox"};

  p.templates["date"] = date_templates();
  p.templates["time"] = time_templates("reservation");
  p.templates["category"] = {
      {"i want {v} food", "somewhere that serves {v}", "i am craving {v}", "{v} would be nice",
       "a {v} place please"},
      {"what kind of food would you like?", "which cuisine do you prefer?"},
      {"how about {v} food?", "would {v} be okay?"},
      {"any cuisine is fine", "i do not care about the food type"},
      {"actually, i would prefer {v} food"},
  };
  p.templates["price_range"] = {
      {"something {v}", "it should be {v}", "i am looking for a {v} place", "{v} please"},
      {"what price range are you looking for?", "how much do you want to spend?"},
      {"is {v} okay?", "i found a {v} option. good?"},
      {"price does not matter", "any price is fine"},
      {"actually, make it {v}"},
  };
  p.templates["rating"] = {
      {"it should be {v}", "only {v} places", "something {v} please", "a {v} restaurant"},
      {"what rating do you want?", "any preference on ratings?"},
      {"would a {v} place work?"},
      {"ratings do not matter", "i do not care about the rating"},
      {},
  };
  p.templates["num_people"] = {
      {"for {v} people", "a table for {v}", "we are {v}", "{v} people please", "party of {v}"},
      {"how many people?", "for how many guests?", "how large is your party?"},
      {"a table for {v}, right?"},
      {},
      {"actually, we will be {v} people", "change it to {v} people"},
  };
  p.templates["location"] = {
      {"in {v}", "somewhere in {v}", "near {v}", "{v} would be best", "i am in {v}"},
      {"which area do you prefer?", "where should the restaurant be?"},
      {"how about a place in {v}?", "is {v} okay?"},
      {"any area is fine", "location does not matter"},
      {"actually, search in {v} instead"},
  };
  p.templates["meal"] = {
      {"for {v}", "we want {v}", "a {v} reservation", "{v} please"},
      {"which meal is this for?", "is this for lunch or dinner?"},
      {"is this for {v}?"},
      {},
      {"actually, make it {v}"},
  };
  p.templates["restaurant_name"] = {
      {"book {v}", "i want to eat at {v}", "a table at {v}", "how about {v}", "{v} please",
       "reserve {v} for us"},
      {"do you have a restaurant in mind?", "which restaurant would you like?"},
      {"i can book {v}. does that work?", "{v} has a table. okay?", "how about {v}?"},
      {"any restaurant is fine", "i do not mind which restaurant"},
      {"actually, book {v} instead", "change the restaurant to {v}"},
  };

  add_common(p);
  p.greetings = {"hi, i need a restaurant reservation", "hello, can you book a table for me?",
                 "i want to go out to eat", "hey, help me find a restaurant"};
  p.system_closings = {"your table is reserved.", "all set, enjoy your meal!",
                       "i have confirmed your reservation."};
  p.min_goal_slots = 3;
  p.max_goal_slots = 7;
  p.train_dialogues = 1116;
  p.dev_dialogues = 349;
  p.test_dialogues = 775;
  return p;
}

}  // namespace

std::vector<std::string> builtin_profile_names() { return {"sim-m-like", "sim-r-like"}; }

GeneratorProfile builtin_profile(std::string_view name, std::uint64_t seed) {
  GeneratorProfile p;
  if (name == "sim-m-like") {
    p = sim_m_like();
  } else if (name == "sim-r-like") {
    p = sim_r_like();
  } else {
    throw ArgumentError("unknown generator profile '" + std::string(name) + "'");
  }
  p.seed = seed;
  p.validate();
  return p;
}

}  // namespace BDST_ABI_NAMESPACE
}  // namespace bdst
