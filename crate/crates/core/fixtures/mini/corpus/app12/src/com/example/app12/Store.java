package com.example.app12;

public class Store {
    private String name = "item 112";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 112);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
